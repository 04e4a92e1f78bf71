#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "lumennav/geometry.hpp"
#include "lumennav/image.hpp"
#include "lumennav/types.hpp"

namespace lumennav {

struct CameraIntrinsics {
  int width = 128;
  int height = 128;
  double vertical_fov_deg = 120.0;
  double far_clip = 300.0;

  /// Throws std::invalid_argument when a field is out of range.
  void validate() const;
  /// Unit ray direction in the camera frame through the center of (row, col).
  Vec3 ray_direction(int row, int col) const;
};

/// Sphere-tracing parameters for the tube distance field.
struct TraceSettings {
  double step_safety = 0.9;
  double hit_threshold = 0.05;  // mm
  int max_steps = 256;
};

/// Seeded smooth 3-D value noise in [-1, 1] (quintic-interpolated lattice).
double value_noise(const Vec3& p, std::uint64_t seed);

/// Distance field of the textured lumen wall: positive inside. The wall
/// radius is the local centerline radius scaled by (1 + a * noise).
class LumenField {
 public:
  explicit LumenField(const TubeEnvironment& env);

  double eval(const Vec3& p, std::size_t& hint) const;
  /// Albedo modulation factor in [1 - 0.25, 1 + 0.25].
  double albedo(const Vec3& p) const;
  std::size_t hint_for(const Vec3& p) const;

 private:
  const TubeEnvironment* env_;
  double amplitude_;
  std::uint64_t radius_seed_;
  std::uint64_t albedo_seed_;
};

/// Ground-truth range image from `pose`. Throws std::invalid_argument when
/// the pose is not strictly inside the lumen.
DepthImage render_depth(const TubeEnvironment& env, const Pose& pose,
                        const CameraIntrinsics& cam,
                        const TraceSettings& settings = {});

/// Linear radiance per pixel and channel before quantization (H x W each).
struct Radiance {
  Eigen::ArrayXXd r, g, b;
  Eigen::ArrayXXd luminance() const { return 0.2126 * r + 0.7152 * g + 0.0722 * b; }
};

/// Headlight shading: Lambertian with inverse-square falloff plus a Phong
/// lobe, all scaled linearly by `light_intensity`. Independent of far clip.
Radiance render_radiance(const TubeEnvironment& env, const Pose& pose,
                         const CameraIntrinsics& cam, double light_intensity,
                         const TraceSettings& settings = {});

RgbImage render_rgb(const TubeEnvironment& env, const Pose& pose,
                    const CameraIntrinsics& cam, double light_intensity,
                    const TraceSettings& settings = {});

struct DatasetOptions {
  int width = 128;
  int height = 128;
  double far_clip = 300.0;
  double fov_min_deg = 90.0;
  double fov_max_deg = 140.0;
  double light_min = 0.5;
  double light_max = 2.0;
  double min_clearance = 1.0;  // mm
  double max_tilt_deg = 25.0;  // viewing axis vs centerline tangent
  std::string config_hash;
};

struct DatasetSample {
  int index = 0;
  std::string rgb_file;
  std::string depth_file;
  Pose pose;
  double light_intensity = 0.0;
  double fov_deg = 0.0;
};

struct DatasetManifest {
  std::uint64_t seed = 0;
  std::string config_hash;
  std::vector<DatasetSample> samples;
};

/// Pose uniformly sampled inside the lumen with wall clearance above
/// `min_clearance`, viewing axis tilted at most `max_tilt_deg` from the local
/// tangent.
Pose sample_interior_pose(const TubeEnvironment& env, std::mt19937_64& rng,
                          double min_clearance, double max_tilt_deg);

/// Writes `count` (PPM, PFM) pairs plus manifest.json to `out_dir`.
DatasetManifest export_dataset(const TubeEnvironment& env, int count,
                               std::uint64_t seed,
                               const std::filesystem::path& out_dir,
                               const DatasetOptions& options = {});

}  // namespace lumennav
