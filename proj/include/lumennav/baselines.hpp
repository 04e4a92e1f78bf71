#pragma once

#include <cstdint>
#include <memory>

#include "lumennav/env.hpp"
#include "lumennav/rl/ppo.hpp"

namespace lumennav {

/// Privileged controller: aims the viewing axis at the centerline point
/// `look_ahead` mm downstream of the tip's projection.
Controller make_oracle_controller(double look_ahead = 30.0);

/// Steers proportionally toward the current navigation target: the target's
/// angular offset, divided by the per-step angular scale, clamped to [-1, 1].
/// Always commands full forward motion.
Controller make_target_follower(double gain = 1.0);

/// Deterministic (mean) action of a trained policy on the current observation.
Controller make_policy_controller(std::shared_ptr<const rl::GaussianPolicy> policy);

/// Oracle episode: gating and start perturbation off, constant forward speed.
TrajectoryLog scripted_oracle(std::shared_ptr<const TubeEnvironment> tube, EpisodeConfig config,
                              const CameraIntrinsics& camera, const DegradationProfile& profile,
                              std::uint64_t seed = 0, double look_ahead = 30.0);

/// Follows the deepest band (level n_levels) under the configured gating rule.
TrajectoryLog scripted_lumen_follower(std::shared_ptr<const TubeEnvironment> tube,
                                      EpisodeConfig config, const CameraIntrinsics& camera,
                                      const DegradationProfile& profile, std::uint64_t seed = 0);

/// Same controller as the lumen follower but on the configured band (level 8).
TrajectoryLog scripted_target_follower(std::shared_ptr<const TubeEnvironment> tube,
                                       EpisodeConfig config, const CameraIntrinsics& camera,
                                       const DegradationProfile& profile, std::uint64_t seed = 0);

}  // namespace lumennav
