#include "lumennav/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace lumennav {

namespace {

void require_steps(const TrajectoryLog& log, const char* what) {
  if (log.steps.empty()) throw std::invalid_argument(std::string(what) + ": empty trajectory log");
}

MeanStd mean_std(const std::vector<double>& xs) {
  MeanStd out;
  for (double x : xs) out.mean += x;
  out.mean /= static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - out.mean) * (x - out.mean);
  out.std = std::sqrt(ss / static_cast<double>(xs.size()));
  return out;
}

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", x);
  return buf;
}

}  // namespace

std::string to_string(PathMode mode) { return mode == PathMode::excess ? "excess" : "literal"; }

PathMode path_mode_from_string(const std::string& name) {
  if (name == "excess") return PathMode::excess;
  if (name == "literal") return PathMode::literal;
  throw std::invalid_argument("unknown path mode '" + name + "' (expected excess or literal)");
}

double d_geo(const TrajectoryLog& log, const TubeEnvironment& env) {
  require_steps(log, "d_geo");
  double sum = 0.0;
  for (const StepRecord& r : log.steps) {
    const NearestPointResult n = env.nearest_on_centerline(r.tip_position);
    sum += r.rho * (1.0 + 0.5 * n.distance / n.radius_at);
  }
  return sum / static_cast<double>(log.steps.size());
}

double path_length(const TrajectoryLog& log) {
  double length = 0.0;
  for (std::size_t i = 1; i < log.steps.size(); ++i) {
    length += (log.steps[i].tip_position - log.steps[i - 1].tip_position).norm();
  }
  return length;
}

double completion_fraction(const TrajectoryLog& log, const TubeEnvironment& env) {
  double best = 0.0;
  for (const StepRecord& r : log.steps) {
    best = std::max(best, env.nearest_on_centerline(r.tip_position).s_star);
  }
  return std::clamp(best / env.centerline().length(), 0.0, 1.0);
}

double s_nav(const TrajectoryLog& log, const TubeEnvironment& env, PathMode mode) {
  require_steps(log, "s_nav");
  const double n_step = static_cast<double>(log.steps.size());
  const double n_col = static_cast<double>(
      std::count_if(log.steps.begin(), log.steps.end(), [](const StepRecord& r) { return r.collision; }));
  const double lc = env.centerline().length();
  double dp = path_length(log);
  if (mode == PathMode::excess) dp = std::max(0.0, dp - lc * completion_fraction(log, env));
  return 1.0 - (0.6 * n_col / n_step + 0.4 * dp / lc);
}

double jerk_index(std::span<const Vec3> positions, double dt) {
  if (positions.size() < 4) throw std::invalid_argument("jerk_index needs at least 4 samples");
  if (!(dt > 0.0)) throw std::invalid_argument("jerk_index needs a positive step period");
  const double inv = 1.0 / (dt * dt * dt);
  double sum = 0.0;
  const std::size_t n = positions.size();
  for (std::size_t i = 1; i + 2 < n; ++i) {
    const Vec3 third = positions[i + 2] - 3.0 * positions[i + 1] + 3.0 * positions[i] - positions[i - 1];
    sum += third.norm() * inv;
  }
  return sum / static_cast<double>(n - 3);
}

double jerk_index(const TrajectoryLog& log) {
  std::vector<Vec3> positions;
  positions.reserve(log.steps.size());
  for (const StepRecord& r : log.steps) positions.push_back(r.tip_position);
  return jerk_index(positions, log.step_period);
}

MetricsReport evaluate(const TrajectoryLog& log, const TubeEnvironment& env, PathMode mode) {
  require_steps(log, "evaluate");
  MetricsReport m;
  m.d_geo = d_geo(log, env);
  m.s_nav = s_nav(log, env, mode);
  m.jerk_index = log.steps.size() >= 4 ? jerk_index(log) : 0.0;
  m.n_steps = static_cast<int>(log.steps.size());
  for (const StepRecord& r : log.steps) {
    if (r.collision) ++m.n_collisions;
    if (r.clearance < kNearWallClearance) ++m.near_wall_steps;
  }
  m.path_length = path_length(log);
  m.centerline_length = env.centerline().length();
  m.completion = completion_fraction(log, env);
  return m;
}

AggregateReport aggregate(std::span<const MetricsReport> reports) {
  if (reports.empty()) throw std::invalid_argument("aggregate: no metrics reports");
  AggregateReport out;
  out.episodes = static_cast<int>(reports.size());
  auto field = [&](auto get) {
    std::vector<double> xs;
    for (const MetricsReport& r : reports) xs.push_back(get(r));
    return mean_std(xs);
  };
  out.d_geo = field([](const MetricsReport& r) { return r.d_geo; });
  out.s_nav = field([](const MetricsReport& r) { return r.s_nav; });
  out.jerk_index = field([](const MetricsReport& r) { return r.jerk_index; });
  out.n_collisions = field([](const MetricsReport& r) { return double(r.n_collisions); });
  out.completion = field([](const MetricsReport& r) { return r.completion; });
  out.path_length = field([](const MetricsReport& r) { return r.path_length; });
  out.near_wall_steps = field([](const MetricsReport& r) { return double(r.near_wall_steps); });
  for (const MetricsReport& r : reports) {
    if (r.n_collisions == 0 && r.completion >= 0.95) ++out.collision_free_complete;
  }
  return out;
}

std::string summary_csv(std::span<const SummaryRow> rows) {
  std::ostringstream out;
  out << "method,episodes,d_geo_mean,d_geo_std,s_nav_mean,s_nav_std,jerk_mean,jerk_std,"
         "collisions_mean,completion_mean,collision_free_complete\n";
  for (const SummaryRow& row : rows) {
    const AggregateReport& a = row.report;
    out << row.method << ',' << a.episodes << ',' << fmt(a.d_geo.mean) << ',' << fmt(a.d_geo.std)
        << ',' << fmt(a.s_nav.mean) << ',' << fmt(a.s_nav.std) << ',' << fmt(a.jerk_index.mean)
        << ',' << fmt(a.jerk_index.std) << ',' << fmt(a.n_collisions.mean) << ','
        << fmt(a.completion.mean) << ',' << a.collision_free_complete << '\n';
  }
  return out.str();
}

std::string trajectory_svg(const TubeEnvironment& env, std::span<const TrajectoryLog> logs,
                           std::span<const std::string> labels) {
  static const char* colors[] = {"#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
  const auto& line = env.centerline();
  std::vector<Vec3> center;
  for (double s = 0.0; s < line.length(); s += 2.0) center.push_back(line.point_at(s));
  center.push_back(line.point_at(line.length()));

  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = -lo;
  for (const Vec3& p : center) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const double pad = line.max_radius() + 5.0;
  lo.array() -= pad;
  hi.array() += pad;

  const double panel = 420.0, margin = 30.0;
  const int axes[2][2] = {{0, 1}, {0, 2}};
  const char* titles[2] = {"top-down (x-y)", "side (x-z)"};
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << 2 * panel + 3 * margin
      << "\" height=\"" << panel + 2 * margin + 20 << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (int k = 0; k < 2; ++k) {
    const int ax = axes[k][0], ay = axes[k][1];
    const double span = std::max(hi[ax] - lo[ax], hi[ay] - lo[ay]);
    const double scale = panel / span;
    const double ox = margin + k * (panel + margin);
    auto px = [&](const Vec3& p) {
      std::ostringstream s;
      s.precision(2);
      s << std::fixed << ox + (p[ax] - lo[ax]) * scale << ','
        << margin + panel - (p[ay] - lo[ay]) * scale;
      return s.str();
    };
    svg << "<text x=\"" << ox << "\" y=\"" << margin - 10 << "\" font-size=\"12\">" << titles[k]
        << "</text>\n";
    svg << "<rect x=\"" << ox << "\" y=\"" << margin << "\" width=\"" << panel << "\" height=\""
        << panel << "\" fill=\"none\" stroke=\"#999\"/>\n";
    svg << "<polyline fill=\"none\" stroke=\"#bbb\" stroke-width=\""
        << std::max(1.0, 2.0 * line.min_radius() * scale) << "\" stroke-opacity=\"0.4\" points=\"";
    for (const Vec3& p : center) svg << px(p) << ' ';
    svg << "\"/>\n<polyline fill=\"none\" stroke=\"#555\" stroke-dasharray=\"4 3\" points=\"";
    for (const Vec3& p : center) svg << px(p) << ' ';
    svg << "\"/>\n";
    for (std::size_t i = 0; i < logs.size(); ++i) {
      svg << "<polyline fill=\"none\" stroke=\"" << colors[i % 6] << "\" stroke-width=\"1.5\" points=\"";
      for (const StepRecord& r : logs[i].steps) svg << px(r.tip_position) << ' ';
      svg << "\"/>\n";
    }
  }
  for (std::size_t i = 0; i < logs.size() && i < labels.size(); ++i) {
    svg << "<text x=\"" << margin + 140.0 * static_cast<double>(i) << "\" y=\""
        << panel + 2 * margin + 10 << "\" font-size=\"12\" fill=\"" << colors[i % 6] << "\">"
        << labels[i] << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace lumennav
