#include "lumennav/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace lumennav {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

double to_command(double angle_rad, double scale_deg) {
  return std::clamp(angle_rad / (scale_deg * kDeg), -1.0, 1.0);
}

}  // namespace

Controller make_oracle_controller(double look_ahead) {
  return [look_ahead](const NavigationEnv& env) {
    const Pose& pose = env.state().pose;
    const auto& line = env.tube().centerline();
    const double s = env.tube().nearest_on_centerline(pose.position).s_star;
    const Vec3 goal = line.point_at(std::min(line.length(), s + look_ahead));
    Vec3 d = goal - pose.position;
    if (d.norm() < 1e-9) d = line.tangent_at(line.length());
    const double x = d.dot(pose.right()), y = d.dot(pose.down()), z = d.dot(pose.forward());
    const double scale = env.config().yaw_pitch_scale;
    return Action{to_command(std::atan2(x, z), scale), to_command(std::atan2(y, z), scale), 1.0};
  };
}

Controller make_target_follower(double gain) {
  return [gain](const NavigationEnv& env) {
    const CameraIntrinsics& cam = env.camera();
    const double focal = 0.5 * cam.height / std::tan(0.5 * cam.vertical_fov_deg * kDeg);
    const double yaw = std::atan(env.offset_u() * 0.5 * cam.width / focal);
    const double pitch = std::atan(env.offset_v() * 0.5 * cam.height / focal);
    const double scale = env.config().yaw_pitch_scale;
    return Action{to_command(gain * yaw, scale), to_command(gain * pitch, scale), 1.0};
  };
}

Controller make_policy_controller(std::shared_ptr<const rl::GaussianPolicy> policy) {
  return [policy](const NavigationEnv& env) {
    const Eigen::Vector4d obs = env.observation().as_vector();
    const Eigen::VectorXd a = rl::act_deterministic(*policy, obs);
    return Action{a[0], a[1], a[2]};
  };
}

TrajectoryLog scripted_oracle(std::shared_ptr<const TubeEnvironment> tube, EpisodeConfig config,
                              const CameraIntrinsics& camera, const DegradationProfile& profile,
                              std::uint64_t seed, double look_ahead) {
  config.gating = false;
  config.perturb_start = false;
  config.forward_mode = ForwardMode::constant;
  NavigationEnv env(std::move(tube), config, camera, profile);
  return run_episode(env, make_oracle_controller(look_ahead), seed);
}

TrajectoryLog scripted_lumen_follower(std::shared_ptr<const TubeEnvironment> tube,
                                      EpisodeConfig config, const CameraIntrinsics& camera,
                                      const DegradationProfile& profile, std::uint64_t seed) {
  config.extraction.level = config.extraction.n_levels;
  config.extraction.order = LevelOrder::near_first;
  NavigationEnv env(std::move(tube), config, camera, profile);
  return run_episode(env, make_target_follower(), seed);
}

TrajectoryLog scripted_target_follower(std::shared_ptr<const TubeEnvironment> tube,
                                       EpisodeConfig config, const CameraIntrinsics& camera,
                                       const DegradationProfile& profile, std::uint64_t seed) {
  NavigationEnv env(std::move(tube), config, camera, profile);
  return run_episode(env, make_target_follower(), seed);
}

}  // namespace lumennav
