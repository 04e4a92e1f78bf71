#pragma once

#include <memory>
#include <vector>

#include "lumennav/env.hpp"
#include "lumennav/rl/ppo.hpp"

namespace lumennav::rl {

/// Trainer-facing adapter over NavigationEnv. Each reset picks one tube from
/// the pool by seed, so a single instance cycles through many environments.
class NavigationRlEnv : public RlEnvironment {
 public:
  NavigationRlEnv(std::vector<std::shared_ptr<const TubeEnvironment>> tubes,
                  EpisodeConfig config, CameraIntrinsics camera, DegradationProfile profile);

  Eigen::VectorXd reset(std::uint64_t seed) override;
  RlStep step(const Eigen::VectorXd& action) override;

  const NavigationEnv& current() const { return envs_[active_]; }

 private:
  std::vector<NavigationEnv> envs_;
  std::size_t active_ = 0;
};

}  // namespace lumennav::rl
