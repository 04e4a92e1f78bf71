#include "lumennav/geometry.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace lumennav {

namespace {

constexpr std::array<double, 5> kGaussNodes = {
    0.0, -0.5384693101056831, 0.5384693101056831, -0.9061798459386640,
    0.9061798459386640};
constexpr std::array<double, 5> kGaussWeights = {
    0.5688888888888889, 0.4786286704993665, 0.4786286704993665,
    0.2369268850561891, 0.2369268850561891};

constexpr double kInvPhi = 0.6180339887498949;

}  // namespace

Pose look_along(const Vec3& position, const Vec3& direction,
                const Vec3& right_hint) {
  const Vec3 z = direction.normalized();
  Vec3 x = right_hint - right_hint.dot(z) * z;
  if (x.norm() < 1e-6) {
    const Vec3 alt = std::abs(z.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
    x = alt - alt.dot(z) * z;
  }
  x.normalize();
  const Vec3 y = z.cross(x);
  Eigen::Matrix3d rot;
  rot.col(0) = x;
  rot.col(1) = y;
  rot.col(2) = z;
  Pose pose;
  pose.position = position;
  pose.orientation = Quat(rot).normalized();
  return pose;
}

// ---------------------------------------------------------------------------
// CenterlineSpline

CenterlineSpline::CenterlineSpline(std::vector<Vec3> control_points,
                                   std::vector<double> radii)
    : points_(std::move(control_points)), radii_(std::move(radii)) {
  const std::size_t n = points_.size();
  if (n < 4) {
    throw std::invalid_argument("centerline needs at least 4 control points, got " +
                                std::to_string(n));
  }
  if (radii_.size() != n) {
    throw std::invalid_argument("centerline radii count does not match control points");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!points_[i].allFinite()) {
      throw std::invalid_argument("non-finite control point " + std::to_string(i));
    }
    if (!(radii_[i] > 0.0) || !std::isfinite(radii_[i])) {
      throw std::invalid_argument("non-positive radius at control point " +
                                  std::to_string(i));
    }
    if (i > 0 && (points_[i] - points_[i - 1]).norm() < 1e-9) {
      throw std::invalid_argument("duplicate consecutive control points at index " +
                                  std::to_string(i));
    }
  }

  // Extended point list with reflected phantom ends.
  std::vector<Vec3> ext;
  ext.reserve(n + 2);
  ext.push_back(2.0 * points_[0] - points_[1]);
  ext.insert(ext.end(), points_.begin(), points_.end());
  ext.push_back(2.0 * points_[n - 1] - points_[n - 2]);

  // Chordal knots.
  std::vector<double> knots(ext.size(), 0.0);
  for (std::size_t i = 1; i < ext.size(); ++i) {
    knots[i] = knots[i - 1] + (ext[i] - ext[i - 1]).norm();
  }

  // Tangent (d/dknot) at every real control point.
  std::vector<Vec3> tangents(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t k = i + 1;
    const Vec3& p0 = ext[k - 1];
    const Vec3& p1 = ext[k];
    const Vec3& p2 = ext[k + 1];
    const double t0 = knots[k - 1], t1 = knots[k], t2 = knots[k + 1];
    tangents[i] = (p1 - p0) / (t1 - t0) - (p2 - p0) / (t2 - t0) + (p2 - p1) / (t2 - t1);
  }

  segments_.reserve(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double dt = knots[i + 2] - knots[i + 1];
    const Vec3 p0 = points_[i], p1 = points_[i + 1];
    const Vec3 m0 = dt * tangents[i], m1 = dt * tangents[i + 1];
    Segment seg;
    seg.a = p0;
    seg.b = m0;
    seg.c = -3.0 * p0 - 2.0 * m0 + 3.0 * p1 - m1;
    seg.d = 2.0 * p0 + m0 - 2.0 * p1 + m1;
    segments_.push_back(seg);
  }

  arc_table_.resize(segments_.size() * (kSubdivisions + 1));
  cumulative_.assign(n, 0.0);
  for (std::size_t seg = 0; seg < segments_.size(); ++seg) {
    double* row = &arc_table_[seg * (kSubdivisions + 1)];
    row[0] = 0.0;
    for (std::size_t k = 0; k < kSubdivisions; ++k) {
      const double u0 = static_cast<double>(k) / kSubdivisions;
      const double u1 = static_cast<double>(k + 1) / kSubdivisions;
      row[k + 1] = row[k] + segment_arclength(seg, u0, u1);
    }
    if (!(row[kSubdivisions] > 0.0)) {
      throw std::invalid_argument("degenerate spline segment " + std::to_string(seg));
    }
    cumulative_[seg + 1] = cumulative_[seg] + row[kSubdivisions];
  }

  const double total = length();
  const auto count = static_cast<std::size_t>(std::ceil(total / 1.0));
  sample_spacing_ = total / static_cast<double>(count);
  sample_points_.reserve(count + 1);
  sample_s_.reserve(count + 1);
  for (std::size_t k = 0; k <= count; ++k) {
    const double s = std::min(total, static_cast<double>(k) * sample_spacing_);
    sample_s_.push_back(s);
    sample_points_.push_back(point_at(s));
  }
}

double CenterlineSpline::segment_arclength(std::size_t seg, double u0,
                                           double u1) const {
  const double half = 0.5 * (u1 - u0);
  const double mid = 0.5 * (u1 + u0);
  double sum = 0.0;
  for (std::size_t q = 0; q < kGaussNodes.size(); ++q) {
    sum += kGaussWeights[q] * segments_[seg].deriv(mid + half * kGaussNodes[q]).norm();
  }
  return sum * half;
}

double CenterlineSpline::check_s(double s) const {
  const double total = length();
  if (!std::isfinite(s) || s < -1e-9 || s > total + 1e-9) {
    throw std::out_of_range("arclength " + std::to_string(s) +
                            " outside [0, " + std::to_string(total) + "]");
  }
  return std::clamp(s, 0.0, total);
}

CenterlineSpline::Location CenterlineSpline::locate(double s) const {
  s = check_s(s);
  auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), s);
  std::size_t seg = static_cast<std::size_t>(std::distance(cumulative_.begin(), it));
  seg = seg == 0 ? 0 : seg - 1;
  seg = std::min(seg, segments_.size() - 1);
  const double local = s - cumulative_[seg];
  const double* row = &arc_table_[seg * (kSubdivisions + 1)];
  auto rit = std::upper_bound(row, row + kSubdivisions + 1, local);
  std::size_t k = static_cast<std::size_t>(std::distance(row, rit));
  k = k == 0 ? 0 : k - 1;
  k = std::min(k, kSubdivisions - 1);
  const double lo = static_cast<double>(k) / kSubdivisions;
  const double hi = static_cast<double>(k + 1) / kSubdivisions;
  const double span = row[k + 1] - row[k];
  double u = lo + (hi - lo) * std::clamp((local - row[k]) / span, 0.0, 1.0);
  const double target = local - row[k];
  for (int iter = 0; iter < 3; ++iter) {
    const double f = segment_arclength(seg, lo, u) - target;
    const double df = segments_[seg].deriv(u).norm();
    if (df <= 0.0) break;
    u = std::clamp(u - f / df, lo, hi);
  }
  return {seg, u};
}

Vec3 CenterlineSpline::point_at(double s) const {
  const Location loc = locate(s);
  return segments_[loc.segment].eval(loc.u);
}

Vec3 CenterlineSpline::tangent_at(double s) const {
  const Location loc = locate(s);
  return segments_[loc.segment].deriv(loc.u).normalized();
}

double CenterlineSpline::curvature_at(double s) const {
  const Location loc = locate(s);
  const Vec3 d1 = segments_[loc.segment].deriv(loc.u);
  const Vec3 d2 = segments_[loc.segment].deriv2(loc.u);
  const double speed = d1.norm();
  return d1.cross(d2).norm() / (speed * speed * speed);
}

double CenterlineSpline::radius_at(double s) const {
  s = check_s(s);
  auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), s);
  std::size_t i = static_cast<std::size_t>(std::distance(cumulative_.begin(), it));
  i = i == 0 ? 0 : i - 1;
  i = std::min(i, radii_.size() - 2);
  const double w = (s - cumulative_[i]) / (cumulative_[i + 1] - cumulative_[i]);
  return radii_[i] + std::clamp(w, 0.0, 1.0) * (radii_[i + 1] - radii_[i]);
}

double CenterlineSpline::control_arclength(std::size_t i) const {
  return cumulative_.at(i);
}

double CenterlineSpline::min_radius() const {
  return *std::min_element(radii_.begin(), radii_.end());
}

double CenterlineSpline::max_radius() const {
  return *std::max_element(radii_.begin(), radii_.end());
}

NearestPointResult CenterlineSpline::nearest(const Vec3& p) const {
  std::size_t best = 0;
  double best_d2 = (sample_points_[0] - p).squaredNorm();
  for (std::size_t i = 1; i < sample_points_.size(); ++i) {
    const double d2 = (sample_points_[i] - p).squaredNorm();
    if (d2 < best_d2) {
      best_d2 = d2;
      best = i;
    }
  }
  double lo = sample_s_[best == 0 ? 0 : best - 1];
  double hi = sample_s_[std::min(best + 1, sample_s_.size() - 1)];
  auto dist2 = [&](double s) { return (point_at(s) - p).squaredNorm(); };
  double x1 = hi - kInvPhi * (hi - lo);
  double x2 = lo + kInvPhi * (hi - lo);
  double f1 = dist2(x1), f2 = dist2(x2);
  while (hi - lo > 1e-7) {
    if (f1 < f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - kInvPhi * (hi - lo);
      f1 = dist2(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + kInvPhi * (hi - lo);
      f2 = dist2(x2);
    }
  }
  double s_star = 0.5 * (lo + hi);
  // the bracket ends may beat the interior near the curve ends
  for (double cand : {sample_s_[best == 0 ? 0 : best - 1],
                      sample_s_[std::min(best + 1, sample_s_.size() - 1)]}) {
    if (dist2(cand) < dist2(s_star)) s_star = cand;
  }
  NearestPointResult out;
  out.s_star = s_star;
  out.point = point_at(s_star);
  out.distance = (out.point - p).norm();
  out.radius_at = radius_at(s_star);
  return out;
}

CenterlineSpline build_centerline(std::vector<Vec3> control_points,
                                  std::vector<double> radii) {
  return CenterlineSpline(std::move(control_points), std::move(radii));
}

// ---------------------------------------------------------------------------
// CenterlinePolyline

CenterlinePolyline::CenterlinePolyline(const CenterlineSpline& spline) {
  const double total = spline.length();
  const auto count =
      std::max<std::size_t>(2, static_cast<std::size_t>(std::ceil(total / 2.0)));
  spacing_ = total / static_cast<double>(count);
  points_.reserve(count + 1);
  for (std::size_t k = 0; k <= count; ++k) {
    const double s = std::min(total, static_cast<double>(k) * spacing_);
    points_.push_back(spline.point_at(s));
    s_.push_back(s);
    radius_.push_back(spline.radius_at(s));
  }
}

double CenterlinePolyline::segment_distance2(std::size_t i, const Vec3& p,
                                             double& t) const {
  const Vec3 ab = points_[i + 1] - points_[i];
  t = std::clamp((p - points_[i]).dot(ab) / ab.squaredNorm(), 0.0, 1.0);
  return (points_[i] + t * ab - p).squaredNorm();
}

CenterlinePolyline::Projection CenterlinePolyline::project_local(
    const Vec3& p, std::size_t& hint) const {
  const std::size_t nseg = points_.size() - 1;
  std::size_t i = std::min(hint, nseg - 1);
  double t = 0.0;
  double d2 = segment_distance2(i, p, t);
  for (;;) {
    double tn = 0.0;
    if (i + 1 < nseg) {
      const double dn = segment_distance2(i + 1, p, tn);
      if (dn < d2) {
        d2 = dn;
        t = tn;
        ++i;
        continue;
      }
    }
    if (i > 0) {
      const double dp = segment_distance2(i - 1, p, tn);
      if (dp < d2) {
        d2 = dp;
        t = tn;
        --i;
        continue;
      }
    }
    break;
  }
  hint = i;
  return {std::sqrt(d2), radius_[i] + t * (radius_[i + 1] - radius_[i]),
          s_[i] + t * (s_[i + 1] - s_[i])};
}

std::size_t CenterlinePolyline::segment_at(double s) const {
  const double idx = std::floor(s / spacing_);
  const auto nseg = points_.size() - 1;
  if (!(idx > 0.0)) return 0;
  return std::min(static_cast<std::size_t>(idx), nseg - 1);
}

// ---------------------------------------------------------------------------
// TubeEnvironment

std::string to_string(ProfileTag tag) {
  switch (tag) {
    case ProfileTag::simple:
      return "simple";
    case ProfileTag::complex:
      return "complex";
    case ProfileTag::custom:
      return "custom";
  }
  return "custom";
}

ProfileTag profile_from_string(const std::string& name) {
  if (name == "simple") return ProfileTag::simple;
  if (name == "complex") return ProfileTag::complex;
  if (name == "custom") return ProfileTag::custom;
  throw std::invalid_argument("unknown environment profile '" + name +
                              "' (expected simple or complex)");
}

TubeEnvironment::TubeEnvironment(CenterlineSpline centerline, ProfileTag profile,
                                 std::uint64_t texture_seed, double far_clip,
                                 double texture_amplitude)
    : centerline_(std::move(centerline)),
      polyline_(centerline_),
      profile_(profile),
      texture_seed_(texture_seed),
      far_clip_(far_clip),
      texture_amplitude_(texture_amplitude) {
  if (!(far_clip_ > 0.0) || !std::isfinite(far_clip_)) {
    throw std::invalid_argument("far_clip must be positive");
  }
  if (!(texture_amplitude_ >= 0.0 && texture_amplitude_ <= 0.1)) {
    throw std::invalid_argument("texture amplitude must lie in [0, 0.1]");
  }
  if (!(centerline_.min_radius() > 2.0 * kTipRadius)) {
    throw std::invalid_argument("lumen radius must exceed twice the tip radius (" +
                                std::to_string(2.0 * kTipRadius) + " mm)");
  }
}

double TubeEnvironment::wall_distance(const Vec3& p) const {
  const NearestPointResult n = centerline_.nearest(p);
  return n.radius_at - n.distance;
}

TubeEnvironment TubeEnvironment::with_texture_amplitude(double amplitude) const {
  return TubeEnvironment(centerline_, profile_, texture_seed_, far_clip_, amplitude);
}

TubeEnvironment TubeEnvironment::with_far_clip(double far_clip) const {
  return TubeEnvironment(centerline_, profile_, texture_seed_, far_clip,
                         texture_amplitude_);
}

TubeEnvironment make_straight_tube(double length, double radius, double far_clip,
                                   double texture_amplitude,
                                   std::uint64_t texture_seed) {
  std::vector<Vec3> pts;
  std::vector<double> radii;
  const int n = std::max(4, static_cast<int>(std::ceil(length / 50.0)) + 1);
  for (int i = 0; i < n; ++i) {
    pts.emplace_back(0.0, 0.0, length * i / (n - 1));
    radii.push_back(radius);
  }
  return TubeEnvironment(CenterlineSpline(std::move(pts), std::move(radii)),
                         ProfileTag::custom, texture_seed, far_clip,
                         texture_amplitude);
}

int count_bends(const CenterlineSpline& spline, double curvature_threshold, double step,
                double merge_gap) {
  int bends = 0;
  double last_curved = -1e300;
  for (double s = 0.0; s <= spline.length(); s += step) {
    if (spline.curvature_at(s) <= curvature_threshold) continue;
    if (s - last_curved > merge_gap) ++bends;
    last_curved = s;
  }
  return bends;
}

// ---------------------------------------------------------------------------
// Procedural generation

namespace {

struct RadiusProfile {
  double base = 20.0;
  double amp1 = 3.5, wavelength1 = 300.0, phase1 = 0.0;
  double amp2 = 1.0, wavelength2 = 110.0, phase2 = 0.0;

  double operator()(double s) const {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    return base + amp1 * std::sin(two_pi * s / wavelength1 + phase1) +
           amp2 * std::sin(two_pi * s / wavelength2 + phase2);
  }
};

struct PathBuilder {
  std::vector<Vec3> points{Vec3::Zero()};
  std::vector<double> arclength{0.0};
  Vec3 heading = Vec3::UnitZ();

  void straight(double len, double spacing) {
    const int steps = std::max(1, static_cast<int>(std::ceil(len / spacing)));
    const double ds = len / steps;
    for (int i = 0; i < steps; ++i) push(points.back() + ds * heading, ds);
  }

  // Planar bend through `angle` toward `lateral` with peak curvature
  // 1/radius. Curvature ramps linearly in and out over `ease` of the bend
  // length at each end, so the spline through the samples does not
  // overshoot where the bend meets a straight.
  void arc(double radius, double angle, const Vec3& lateral, double spacing, double ease = 0.3) {
    const Vec3 axis = heading.cross(lateral).normalized();
    const double kappa = 1.0 / radius;
    // ramps contribute half their length at full curvature each
    const double len = angle / (kappa * (1.0 - ease));
    const double ramp = ease * len;
    const int fine = std::max(8, static_cast<int>(std::ceil(len / 0.25)));
    const double h = len / fine;
    auto curvature = [&](double s) {
      if (s < ramp) return kappa * s / ramp;
      if (s > len - ramp) return kappa * (len - s) / ramp;
      return kappa;
    };
    Vec3 p = points.back();
    double s = 0.0, since_push = 0.0;
    for (int i = 0; i < fine; ++i) {
      // midpoint rule on the heading angle
      const double turn_mid = curvature(s + 0.5 * h) * h;
      const Vec3 mid_heading = Eigen::AngleAxisd(0.5 * turn_mid, axis) * heading;
      p += h * mid_heading;
      heading = (Eigen::AngleAxisd(turn_mid, axis) * heading).normalized();
      s += h;
      since_push += h;
      if (since_push >= spacing - 1e-9 || i + 1 == fine) {
        push(p, since_push);
        since_push = 0.0;
      }
    }
  }

  void push(const Vec3& p, double ds) {
    points.push_back(p);
    arclength.push_back(arclength.back() + ds);
  }
};

bool self_avoiding(const std::vector<Vec3>& pts, const std::vector<double>& s,
                   const RadiusProfile& radius) {
  // parts of the tube far apart in arclength must not come close in space
  for (std::size_t i = 0; i < pts.size(); i += 2) {
    for (std::size_t j = i + 1; j < pts.size(); j += 2) {
      if (s[j] - s[i] < 160.0) continue;
      const double clearance = radius(s[i]) + radius(s[j]) + 15.0;
      if ((pts[i] - pts[j]).squaredNorm() < clearance * clearance) return false;
    }
  }
  return true;
}

}  // namespace

TubeEnvironment generate_environment(ProfileTag profile, std::uint64_t seed) {
  if (profile == ProfileTag::custom) {
    throw std::invalid_argument("generate_environment needs profile simple or complex");
  }
  const bool complex = profile == ProfileTag::complex;
  std::mt19937_64 rng(mix_seed(seed, complex ? 0xC0C0u : 0x5157u));
  auto uniform = [&rng](double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
  };
  constexpr double deg = std::numbers::pi / 180.0;
  constexpr double kPathSpacing = 5.0;
  constexpr double kControlSpacing = 5.0;

  for (int attempt = 0; attempt < 10000; ++attempt) {
    RadiusProfile radius;
    radius.wavelength1 = uniform(250.0, 400.0);
    radius.phase1 = uniform(0.0, 2.0 * std::numbers::pi);
    radius.wavelength2 = uniform(90.0, 140.0);
    radius.phase2 = uniform(0.0, 2.0 * std::numbers::pi);

    const int n_bends = complex ? std::uniform_int_distribution<int>(6, 10)(rng)
                                : std::uniform_int_distribution<int>(3, 5)(rng);
    std::vector<bool> sharp(static_cast<std::size_t>(n_bends), false);
    if (complex) {
      const int n_sharp = std::uniform_int_distribution<int>(2, 3)(rng);
      std::vector<int> order(static_cast<std::size_t>(n_bends));
      for (int i = 0; i < n_bends; ++i) order[static_cast<std::size_t>(i)] = i;
      std::shuffle(order.begin(), order.end(), rng);
      for (int i = 0; i < n_sharp; ++i) sharp[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = true;
    }

    PathBuilder path;
    path.straight(uniform(70.0, 100.0), kPathSpacing);
    Vec3 prev_lateral = Vec3::Zero();
    for (int b = 0; b < n_bends; ++b) {
      double factor, angle;
      if (!complex) {
        factor = uniform(4.6, 6.5);
        angle = uniform(35.0, 70.0) * deg;
      } else if (sharp[static_cast<std::size_t>(b)]) {
        factor = uniform(1.9, 2.3);
        angle = uniform(60.0, 95.0) * deg;
      } else {
        factor = uniform(3.0, 5.0);
        angle = uniform(35.0, 75.0) * deg;
      }
      // sharp bends are sized against the smallest radius the arc can see,
      // gentle ones against the largest
      const double s_now = path.arclength.back();
      double r_min = radius(s_now), r_max = r_min;
      for (double ds = 5.0; ds <= 160.0; ds += 5.0) {
        r_min = std::min(r_min, radius(s_now + ds));
        r_max = std::max(r_max, radius(s_now + ds));
      }
      const double bend_radius =
          (complex && sharp[static_cast<std::size_t>(b)]) ? factor * r_min : factor * r_max;
      // lateral direction: random rotation about the heading, biased away
      // from repeating the previous turn so the path does not coil
      Vec3 ref = std::abs(path.heading.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
      Vec3 e1 = (ref - ref.dot(path.heading) * path.heading).normalized();
      Vec3 e2 = path.heading.cross(e1);
      Vec3 lateral;
      for (;;) {
        const double psi = uniform(0.0, 2.0 * std::numbers::pi);
        lateral = std::cos(psi) * e1 + std::sin(psi) * e2;
        if (prev_lateral.isZero() || lateral.dot(prev_lateral) < 0.3) break;
      }
      prev_lateral = lateral;
      path.arc(bend_radius, angle, lateral, kPathSpacing);
      path.straight(complex ? uniform(35.0, 70.0) : uniform(50.0, 110.0), kPathSpacing);
    }
    double total = path.arclength.back();
    if (total < 600.0) path.straight(650.0 - total + uniform(0.0, 50.0), kPathSpacing);
    else path.straight(60.0, kPathSpacing);
    total = path.arclength.back();
    if (total > 1190.0) continue;
    if (!self_avoiding(path.points, path.arclength, radius)) continue;

    std::vector<Vec3> control;
    std::vector<double> radii;
    double next = 0.0;
    for (std::size_t i = 0; i < path.points.size(); ++i) {
      const bool last = i + 1 == path.points.size();
      if (path.arclength[i] + 1e-9 >= next || last) {
        if (last && !control.empty() &&
            path.arclength[i] - next + kControlSpacing < 0.5 * kControlSpacing) {
          control.back() = path.points[i];
          radii.back() = radius(path.arclength[i]);
          break;
        }
        control.push_back(path.points[i]);
        radii.push_back(radius(path.arclength[i]));
        next = path.arclength[i] + kControlSpacing;
      }
    }
    CenterlineSpline spline(std::move(control), std::move(radii));
    if (spline.length() < 600.0 || spline.length() > 1200.0) continue;
    return TubeEnvironment(std::move(spline), profile, mix_seed(seed, 0x7E47u));
  }
  throw std::runtime_error("environment generation did not converge");
}

}  // namespace lumennav
