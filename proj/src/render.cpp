#include "lumennav/render.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace lumennav {

namespace {

constexpr double kTextureScale = 12.0;    // mm per noise lattice cell
constexpr double kExposureDistance = 20.0;  // mm at which unit light gives unit irradiance
constexpr double kSpecular = 0.25;
constexpr double kShininess = 32.0;
constexpr double kRgbMaxDistance = 1.0e4;  // mm

double lattice(std::int64_t x, std::int64_t y, std::int64_t z, std::uint64_t seed) {
  std::uint64_t h = mix_seed(seed, static_cast<std::uint64_t>(x));
  h = mix_seed(h, static_cast<std::uint64_t>(y));
  h = mix_seed(h, static_cast<std::uint64_t>(z));
  return static_cast<double>(h >> 11) * (2.0 / 9007199254740992.0) - 1.0;
}

double fade(double t) { return t * t * t * (t * (t * 6.0 - 15.0) + 10.0); }

struct Hit {
  double t = -1.0;
  bool hit = false;
};

Hit trace_ray(const LumenField& field, const Vec3& origin, const Vec3& dir,
              std::size_t hint, double max_t, const TraceSettings& settings) {
  double t = 0.0;
  for (int i = 0; i < settings.max_steps; ++i) {
    const double d = field.eval(origin + t * dir, hint);
    if (d < settings.hit_threshold) {
      // Secant polish along the ray; the field is locally close to linear.
      constexpr double h = 0.01;
      for (int k = 0; k < 2; ++k) {
        const double f0 = field.eval(origin + t * dir, hint);
        const double f1 = field.eval(origin + (t + h) * dir, hint);
        const double slope = (f1 - f0) / h;
        if (slope > -1e-6) break;
        t -= std::clamp(f0 / slope, -2.0, 2.0);
      }
      return {t, true};
    }
    t += settings.step_safety * d;
    if (t > max_t) return {t, false};
  }
  return {t, false};
}

void check_pose(const TubeEnvironment& env, const Pose& pose) {
  if (!pose.position.allFinite() ||
      std::abs(pose.orientation.norm() - 1.0) > 1e-9) {
    throw std::invalid_argument("camera pose must be finite with a unit quaternion");
  }
  if (!(env.wall_distance(pose.position) > 0.0)) {
    throw std::invalid_argument("camera pose is outside the lumen");
  }
}

}  // namespace

void CameraIntrinsics::validate() const {
  if (width < 16 || height < 16) {
    throw std::invalid_argument("camera width and height must be at least 16 px");
  }
  if (!(vertical_fov_deg >= 20.0 && vertical_fov_deg <= 170.0)) {
    throw std::invalid_argument("camera vertical FOV must lie in [20, 170] degrees");
  }
  if (!(far_clip > 0.0) || !std::isfinite(far_clip)) {
    throw std::invalid_argument("camera far_clip must be positive");
  }
}

Vec3 CameraIntrinsics::ray_direction(int row, int col) const {
  const double focal =
      0.5 * height / std::tan(0.5 * vertical_fov_deg * std::numbers::pi / 180.0);
  return Vec3((col + 0.5 - 0.5 * width) / focal, (row + 0.5 - 0.5 * height) / focal, 1.0)
      .normalized();
}

double value_noise(const Vec3& p, std::uint64_t seed) {
  const double fx = std::floor(p.x()), fy = std::floor(p.y()), fz = std::floor(p.z());
  const auto ix = static_cast<std::int64_t>(fx);
  const auto iy = static_cast<std::int64_t>(fy);
  const auto iz = static_cast<std::int64_t>(fz);
  const double tx = fade(p.x() - fx), ty = fade(p.y() - fy), tz = fade(p.z() - fz);
  auto lerp = [](double a, double b, double t) { return a + t * (b - a); };
  double c[2][2];
  for (int dz = 0; dz < 2; ++dz) {
    for (int dy = 0; dy < 2; ++dy) {
      c[dz][dy] = lerp(lattice(ix, iy + dy, iz + dz, seed),
                       lattice(ix + 1, iy + dy, iz + dz, seed), tx);
    }
  }
  return lerp(lerp(c[0][0], c[0][1], ty), lerp(c[1][0], c[1][1], ty), tz);
}

LumenField::LumenField(const TubeEnvironment& env)
    : env_(&env),
      amplitude_(env.texture_amplitude()),
      radius_seed_(mix_seed(env.texture_seed(), 1)),
      albedo_seed_(mix_seed(env.texture_seed(), 2)) {}

double LumenField::eval(const Vec3& p, std::size_t& hint) const {
  const auto proj = env_->polyline().project_local(p, hint);
  double radius = proj.radius;
  if (amplitude_ > 0.0) {
    radius *= 1.0 + amplitude_ * value_noise(p / kTextureScale, radius_seed_);
  }
  return radius - proj.distance;
}

double LumenField::albedo(const Vec3& p) const {
  const double coarse = value_noise(p / kTextureScale, albedo_seed_);
  const double fine = value_noise(p / (0.35 * kTextureScale), albedo_seed_ ^ 0xABCDu);
  return 1.0 + 0.17 * coarse + 0.08 * fine;
}

std::size_t LumenField::hint_for(const Vec3& p) const {
  return env_->polyline().segment_at(env_->nearest_on_centerline(p).s_star);
}

DepthImage render_depth(const TubeEnvironment& env, const Pose& pose,
                        const CameraIntrinsics& cam, const TraceSettings& settings) {
  cam.validate();
  check_pose(env, pose);
  const LumenField field(env);
  const std::size_t hint = field.hint_for(pose.position);
  const Eigen::Matrix3d rot = pose.orientation.toRotationMatrix();
  DepthImage depth(cam.width, cam.height, cam.far_clip);
  const double max_t = cam.far_clip * 1.001 + settings.hit_threshold;
  for (int row = 0; row < cam.height; ++row) {
    for (int col = 0; col < cam.width; ++col) {
      const Vec3 dir = rot * cam.ray_direction(row, col);
      const Hit hit = trace_ray(field, pose.position, dir, hint, max_t, settings);
      if (hit.hit && hit.t > 0.0 && hit.t <= cam.far_clip) {
        depth.range(row, col) = hit.t;
        depth.valid(row, col) = true;
      }
    }
  }
  return depth;
}

Radiance render_radiance(const TubeEnvironment& env, const Pose& pose,
                         const CameraIntrinsics& cam, double light_intensity,
                         const TraceSettings& settings) {
  cam.validate();
  check_pose(env, pose);
  if (!(light_intensity >= 0.0) || !std::isfinite(light_intensity)) {
    throw std::invalid_argument("light intensity must be a non-negative number");
  }
  const LumenField field(env);
  const std::size_t hint = field.hint_for(pose.position);
  const Eigen::Matrix3d rot = pose.orientation.toRotationMatrix();
  Radiance out{Eigen::ArrayXXd::Zero(cam.height, cam.width),
               Eigen::ArrayXXd::Zero(cam.height, cam.width),
               Eigen::ArrayXXd::Zero(cam.height, cam.width)};
  const Vec3 base_albedo(0.85, 0.42, 0.38);
  constexpr double h = 0.05;
  for (int row = 0; row < cam.height; ++row) {
    for (int col = 0; col < cam.width; ++col) {
      const Vec3 dir = rot * cam.ray_direction(row, col);
      const Hit hit = trace_ray(field, pose.position, dir, hint, kRgbMaxDistance, settings);
      if (!hit.hit || hit.t <= 0.0) continue;
      const Vec3 p = pose.position + hit.t * dir;
      std::size_t local = hint;
      field.eval(p, local);
      Vec3 grad;
      for (int a = 0; a < 3; ++a) {
        Vec3 e = Vec3::Zero();
        e[a] = h;
        std::size_t k1 = local, k2 = local;
        grad[a] = (field.eval(p + e, k1) - field.eval(p - e, k2)) / (2.0 * h);
      }
      const Vec3 normal = grad.normalized();  // points into the lumen
      const double cos_theta = std::max(0.0, normal.dot(-dir));
      const double falloff =
          (kExposureDistance * kExposureDistance) / (hit.t * hit.t);
      const double tex = field.albedo(p);
      const double diffuse = cos_theta * falloff * light_intensity;
      const double specular =
          kSpecular * std::pow(cos_theta, kShininess) * falloff * light_intensity;
      out.r(row, col) = base_albedo.x() * tex * diffuse + specular;
      out.g(row, col) = base_albedo.y() * tex * diffuse + specular;
      out.b(row, col) = base_albedo.z() * tex * diffuse + specular;
    }
  }
  return out;
}

RgbImage render_rgb(const TubeEnvironment& env, const Pose& pose,
                    const CameraIntrinsics& cam, double light_intensity,
                    const TraceSettings& settings) {
  const Radiance rad = render_radiance(env, pose, cam, light_intensity, settings);
  RgbImage image(cam.width, cam.height);
  auto quantize = [](double v) {
    const double encoded = std::pow(std::clamp(v, 0.0, 1.0), 1.0 / 2.2);
    return static_cast<std::uint8_t>(std::lround(encoded * 255.0));
  };
  for (int row = 0; row < cam.height; ++row) {
    for (int col = 0; col < cam.width; ++col) {
      std::uint8_t* px = image.at(row, col);
      px[0] = quantize(rad.r(row, col));
      px[1] = quantize(rad.g(row, col));
      px[2] = quantize(rad.b(row, col));
    }
  }
  return image;
}

Pose sample_interior_pose(const TubeEnvironment& env, std::mt19937_64& rng,
                          double min_clearance, double max_tilt_deg) {
  const CenterlineSpline& line = env.centerline();
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const LumenField field(env);
  for (int attempt = 0; attempt < 100000; ++attempt) {
    const double s = line.length() * (0.03 + 0.94 * unit(rng));
    const Vec3 center = line.point_at(s);
    const Vec3 tangent = line.tangent_at(s);
    const Pose frame = look_along(center, tangent);
    const double phi = 2.0 * std::numbers::pi * unit(rng);
    const double reach = std::sqrt(unit(rng)) * 0.8 * line.radius_at(s);
    const Vec3 position =
        center + reach * (std::cos(phi) * frame.right() + std::sin(phi) * frame.down());
    if (!(env.wall_distance(position) > min_clearance)) continue;
    std::size_t hint = field.hint_for(position);
    if (!(field.eval(position, hint) > min_clearance)) continue;

    const double tilt = max_tilt_deg * std::numbers::pi / 180.0 * std::sqrt(unit(rng));
    const double tilt_axis_angle = 2.0 * std::numbers::pi * unit(rng);
    const Vec3 tilt_axis = std::cos(tilt_axis_angle) * frame.right() +
                           std::sin(tilt_axis_angle) * frame.down();
    const Vec3 view = Eigen::AngleAxisd(tilt, tilt_axis) * tangent;
    const double roll = 2.0 * std::numbers::pi * unit(rng);
    Pose pose = look_along(position, view, frame.right());
    pose.orientation =
        (pose.orientation * Quat(Eigen::AngleAxisd(roll, Vec3::UnitZ()))).normalized();
    return pose;
  }
  throw std::runtime_error("could not sample an interior pose");
}

}  // namespace lumennav
