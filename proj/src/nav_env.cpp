#include "lumennav/rl/nav_env.hpp"

#include <stdexcept>

namespace lumennav::rl {

NavigationRlEnv::NavigationRlEnv(std::vector<std::shared_ptr<const TubeEnvironment>> tubes,
                                 EpisodeConfig config, CameraIntrinsics camera,
                                 DegradationProfile profile) {
  if (tubes.empty()) throw std::invalid_argument("NavigationRlEnv needs at least one tube");
  for (auto& tube : tubes) envs_.emplace_back(std::move(tube), config, camera, profile);
}

Eigen::VectorXd NavigationRlEnv::reset(std::uint64_t seed) {
  active_ = static_cast<std::size_t>(mix_seed(seed, 0x7B0Bu) % envs_.size());
  return envs_[active_].reset(seed).as_vector();
}

RlStep NavigationRlEnv::step(const Eigen::VectorXd& action) {
  const StepOutcome out = envs_[active_].step(Action{action[0], action[1], action[2]});
  RlStep st;
  st.observation = out.observation.as_vector();
  st.reward = out.reward.total;
  st.done = out.done;
  st.reason = out.done_reason;
  return st;
}

}  // namespace lumennav::rl
