#pragma once

#include <cstdint>
#include <string>

#include <Eigen/Core>

#include "lumennav/geometry.hpp"
#include "lumennav/image.hpp"
#include "lumennav/render.hpp"

namespace lumennav {

enum class SeedPolicy {
  per_frame,  // fresh noise every frame (frame seed mixed with the step index)
  frozen,     // one noise pattern reused for every frame of an episode
};

/// Parametric stand-in for a monocular depth network: multiplicative
/// log-normal noise (optionally spatially correlated), Gaussian blur, then
/// sparse outliers.
struct DegradationProfile {
  double sigma_mult = 0.0;     // std of log-depth noise
  double blur_radius = 0.0;    // Gaussian sigma, px
  double dropout_rate = 0.0;   // fraction of pixels turned into outliers
  double outlier_scale = 0.0;  // outlier depth factor is (1 + scale)^{+-1}
  // Correlation length (Gaussian sigma, px) of the log-depth noise field;
  // 0 draws independent noise per pixel.
  double noise_scale = 0.0;
  SeedPolicy seed_policy = SeedPolicy::per_frame;

  void validate() const;
  bool is_identity() const {
    return sigma_mult == 0.0 && blur_radius == 0.0 && dropout_rate == 0.0;
  }
};

DepthImage degrade_depth(const DepthImage& gt, const DegradationProfile& profile,
                         std::uint64_t frame_seed);

/// Mean |pred - gt| / gt over jointly valid pixels.
double abs_rel(const DepthImage& pred, const DepthImage& gt);

/// Fraction of jointly valid pixels with max(pred/gt, gt/pred) < 1.25.
double delta1(const DepthImage& pred, const DepthImage& gt);

struct NavigationTarget {
  double t_x = 0.0;  // px, pixel centers at col + 0.5
  double t_y = 0.0;
  bool valid = false;
  long level_pixel_count = 0;
};

enum class LevelOrder { near_first, far_first };

enum class LevelRegion {
  band,    // pixels inside the quantile band of the level
  beyond,  // pixels deeper than the level's lower edge, plus pixels past far clip
};

struct ExtractionSettings {
  int level = 8;
  int n_levels = 20;
  LevelOrder order = LevelOrder::near_first;
  LevelRegion region = LevelRegion::band;
  long min_component_pixels = 10;
};

/// Centroid of the largest 4-connected component of one depth-quantile band.
/// Band k (near-first) holds valid pixels with depth in (q_{(k-1)/n}, q_{k/n}],
/// q_p being the nearest-rank quantile of the valid depths and q_0 = -inf.
/// With LevelRegion::beyond the set is everything deeper than q_{(k-1)/n},
/// i.e. the area enclosed by the level's iso-depth contour.
NavigationTarget extract_navigation_point(const DepthImage& depth,
                                          const ExtractionSettings& settings = {});

/// Four-component normalized target encoding fed to the policy.
struct Observation {
  double x_norm = 0.0;
  double y_norm = 0.0;
  double dx_norm = 0.0;
  double dy_norm = 0.0;

  Eigen::Vector4d as_vector() const { return {x_norm, y_norm, dx_norm, dy_norm}; }
  bool operator==(const Observation&) const = default;
};

enum class EncodingMode {
  centered,       // dx = 2 (t_x - c_x) / W
  literal,  // dx = 2 (t_x - c_x) / W - 1, clamped to [-1, 1]
};

Observation encode_observation(const NavigationTarget& target, const CameraIntrinsics& cam,
                               EncodingMode mode = EncodingMode::centered);

struct DepthStats {
  double abs_rel = 0.0;
  double delta1 = 1.0;
  int frames = 0;
};

/// Abs.Rel and delta1 of `profile` pooled over `frames` ground-truth renders
/// from poses sampled inside `env` (per-frame means, then averaged).
DepthStats measure_profile(const TubeEnvironment& env, const CameraIntrinsics& cam,
                           const DegradationProfile& profile, int frames,
                           std::uint64_t seed);

struct CalibrationOptions {
  int frames = 200;
  int max_evaluations = 400;
  double abs_rel_tolerance = 0.02;
  double delta1_tolerance = 0.04;
  double blur_radius = 0.6;  // held fixed during the search
  double noise_scale = 0.0;  // held fixed during the search
};

struct CalibrationResult {
  DegradationProfile profile;
  DepthStats achieved;
  bool converged = false;
  int evaluations = 0;
};

/// Searches sigma, dropout and outlier scale by coordinate descent until the
/// measured statistics land within tolerance of the targets. A result with
/// converged == false carries the best profile found within the budget.
CalibrationResult calibrate_profile(const TubeEnvironment& env, const CameraIntrinsics& cam,
                                    double target_abs_rel, double target_delta1,
                                    std::uint64_t seed,
                                    const CalibrationOptions& options = {});

}  // namespace lumennav
