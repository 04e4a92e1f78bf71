#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "lumennav/perception.hpp"

namespace lumennav {

namespace {

struct FrameSet {
  std::vector<DepthImage> gt;
  std::vector<std::uint64_t> seeds;
};

FrameSet render_frames(const TubeEnvironment& env, const CameraIntrinsics& cam, int frames,
                       std::uint64_t seed) {
  if (frames < 1) throw std::invalid_argument("need at least one calibration frame");
  std::mt19937_64 rng(mix_seed(seed, 0xCA11u));
  FrameSet set;
  while (static_cast<int>(set.gt.size()) < frames) {
    const Pose pose = sample_interior_pose(env, rng, 1.0, 25.0);
    DepthImage gt = render_depth(env, pose, cam);
    if (gt.valid_count() == 0) continue;
    set.seeds.push_back(mix_seed(seed, set.gt.size()));
    set.gt.push_back(std::move(gt));
  }
  return set;
}

DepthStats evaluate(const FrameSet& set, const DegradationProfile& profile) {
  DepthStats stats;
  stats.abs_rel = 0.0;
  stats.delta1 = 0.0;
  for (std::size_t i = 0; i < set.gt.size(); ++i) {
    const DepthImage pred = degrade_depth(set.gt[i], profile, set.seeds[i]);
    stats.abs_rel += abs_rel(pred, set.gt[i]);
    stats.delta1 += delta1(pred, set.gt[i]);
  }
  stats.frames = static_cast<int>(set.gt.size());
  stats.abs_rel /= stats.frames;
  stats.delta1 /= stats.frames;
  return stats;
}

}  // namespace

DepthStats measure_profile(const TubeEnvironment& env, const CameraIntrinsics& cam,
                           const DegradationProfile& profile, int frames,
                           std::uint64_t seed) {
  return evaluate(render_frames(env, cam, frames, seed), profile);
}

CalibrationResult calibrate_profile(const TubeEnvironment& env, const CameraIntrinsics& cam,
                                    double target_abs_rel, double target_delta1,
                                    std::uint64_t seed, const CalibrationOptions& options) {
  if (!(target_abs_rel >= 0.0 && target_abs_rel <= 0.6)) {
    throw std::invalid_argument("target Abs.Rel must lie in [0, 0.6]");
  }
  if (!(target_delta1 >= 0.0 && target_delta1 <= 1.0)) {
    throw std::invalid_argument("target delta1 must lie in [0, 1]");
  }
  const FrameSet frames = render_frames(env, cam, options.frames, seed);
  CalibrationResult result;

  auto score = [&](const DepthStats& s) {
    const double a = (s.abs_rel - target_abs_rel) / options.abs_rel_tolerance;
    const double d = (s.delta1 - target_delta1) / options.delta1_tolerance;
    return a * a + d * d;
  };
  auto within = [&](const DepthStats& s) {
    return std::abs(s.abs_rel - target_abs_rel) <= 0.5 * options.abs_rel_tolerance &&
           std::abs(s.delta1 - target_delta1) <= 0.5 * options.delta1_tolerance;
  };

  if (target_abs_rel == 0.0 && target_delta1 == 1.0) {
    result.profile = DegradationProfile{};
    result.achieved = evaluate(frames, result.profile);
    result.evaluations = 1;
    result.converged = true;
    return result;
  }

  // parameters: sigma_mult, dropout_rate, outlier_scale
  std::array<double, 3> x = {0.2, 0.05, 1.0};
  std::array<double, 3> step = {0.05, 0.02, 0.25};
  const std::array<double, 3> lo = {0.0, 0.0, 0.0};
  const std::array<double, 3> hi = {1.5, 0.2, 4.0};
  auto make = [&](const std::array<double, 3>& p) {
    DegradationProfile profile;
    profile.sigma_mult = p[0];
    profile.dropout_rate = p[1];
    profile.outlier_scale = p[2];
    profile.blur_radius = options.blur_radius;
    profile.noise_scale = options.noise_scale;
    return profile;
  };

  DepthStats best_stats = evaluate(frames, make(x));
  double best = score(best_stats);
  int evals = 1;
  while (evals < options.max_evaluations && !within(best_stats)) {
    bool improved = false;
    for (std::size_t k = 0; k < x.size() && evals < options.max_evaluations; ++k) {
      for (double sign : {1.0, -1.0}) {
        auto cand = x;
        cand[k] = std::clamp(cand[k] + sign * step[k], lo[k], hi[k]);
        if (cand[k] == x[k]) continue;
        const DepthStats stats = evaluate(frames, make(cand));
        ++evals;
        const double sc = score(stats);
        if (sc < best) {
          best = sc;
          best_stats = stats;
          x = cand;
          improved = true;
          break;
        }
      }
    }
    if (!improved) {
      for (auto& s : step) s *= 0.5;
      if (step[0] < 1e-5) break;
    }
  }
  result.profile = make(x);
  result.achieved = best_stats;
  result.evaluations = evals;
  result.converged = std::abs(best_stats.abs_rel - target_abs_rel) <= options.abs_rel_tolerance &&
                     std::abs(best_stats.delta1 - target_delta1) <= options.delta1_tolerance;
  return result;
}

}  // namespace lumennav
