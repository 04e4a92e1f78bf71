#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "lumennav/geometry.hpp"
#include "lumennav/perception.hpp"
#include "lumennav/render.hpp"
#include "lumennav/reward.hpp"
#include "lumennav/trajectory.hpp"

namespace lumennav {

/// Tip command, every component in [-1, 1]: yaw (image-right positive),
/// pitch (image-down positive), axial.
struct Action {
  double a_lr = 0.0;
  double a_ud = 0.0;
  double a_fw = 0.0;

  Action clamped() const;
  Eigen::Vector3d as_vector() const { return {a_lr, a_ud, a_fw}; }
  static Action from_vector(const Eigen::Vector3d& v) { return {v[0], v[1], v[2]}; }
};

enum class ForwardMode {
  action,         // forward_speed * max(a_fw, 0) while the gate is open
  constant,       // forward_speed whenever the gate is open, a_fw ignored
  bidirectional,  // forward_speed * a_fw while the gate is open
};

std::string to_string(ForwardMode mode);
ForwardMode forward_mode_from_string(const std::string& name);

/// Level 8 of 20, near-first, using the area enclosed by the level contour.
inline ExtractionSettings navigation_extraction() {
  ExtractionSettings s;
  s.region = LevelRegion::beyond;
  return s;
}

struct EpisodeConfig {
  int horizon = 1000;
  double tau = 0.1;
  double clearance_min = 1.0;      // mm
  double yaw_pitch_scale = 3.0;    // degrees per step at |a| = 1
  double forward_speed = 1.0;      // mm per step
  double gate_ratio = 0.35;
  int stability_window = 10;
  int stability_count = 5;
  double epsilon = 1e-6;

  double step_period = 1.0;  // s
  int target_lost_frames = 25;
  double goal_fraction = 0.98;
  bool success_terminates = false;
  bool gating = true;
  ForwardMode forward_mode = ForwardMode::action;

  double segment_spacing = 10.0;  // mm between follow-the-leader body segments
  int n_segments = 8;

  double start_s = 0.0;
  double start_offset_fraction = 0.2;  // of local radius
  double start_tilt_deg = 10.0;
  bool perturb_start = true;

  ExtractionSettings extraction = navigation_extraction();
  EncodingMode encoding = EncodingMode::centered;
  RewardTerms rewards;

  void validate() const;
};

struct TipState {
  Pose pose;
  std::vector<Vec3> trace;           // tip positions, oldest first
  std::vector<double> trace_length;  // cumulative path length along trace
  int step_index = 0;
};

/// Body segment i (1-based) sits on the trace at path distance
/// i * segment_spacing behind the newest trace point; distances past the
/// start of the trace clamp to the first point.
std::vector<Vec3> ftl_body(std::span<const Vec3> trace, double segment_spacing,
                           int n_segments);

struct TerminationInputs {
  double min_clearance = 0.0;  // over tip and body, mm
  int step_index = 0;
  double s_star = 0.0;
  double centerline_length = 1.0;
  int consecutive_invalid = 0;
  bool success_event = false;
};

/// Priority: collision, goal_reached, success (when terminal), target_lost,
/// horizon.
DoneReason check_termination(const TerminationInputs& in, const EpisodeConfig& config);

struct StepInfo {
  double clearance = 0.0;
  bool gated = false;     // forward motion permitted this step
  double gate_rho = 0.0;  // target-center ratio the gate decision used
  double translation = 0.0;
  double rho = 0.0;  // ratio for the new observation
  bool target_valid = false;
  double s_star = 0.0;
};

struct StepOutcome {
  Observation observation;
  RewardBreakdown reward;
  bool done = false;
  DoneReason done_reason = DoneReason::none;
  StepInfo info;
};

/// Target-center distance over half-diagonal.
double target_ratio(const NavigationTarget& target, const CameraIntrinsics& cam);

/// Follow-the-leader endoscope in a lumen with monocular depth perception.
/// Single-threaded; each instance owns its state and randomness.
class NavigationEnv {
 public:
  NavigationEnv(std::shared_ptr<const TubeEnvironment> tube, EpisodeConfig config,
                CameraIntrinsics camera, DegradationProfile profile);

  Observation reset(std::uint64_t seed);
  /// Starts from an explicit pose instead of the seeded perturbation.
  Observation reset_to(const Pose& pose, std::uint64_t seed);

  StepOutcome step(const Action& action);

  bool done() const { return done_; }
  const TipState& state() const { return state_; }
  std::vector<Vec3> body() const;
  const NavigationTarget& target() const { return target_; }
  const Observation& observation() const { return observation_; }
  double offset_u() const { return u_; }
  double offset_v() const { return v_; }
  double rho() const { return rho_; }
  const TubeEnvironment& tube() const { return *tube_; }
  std::shared_ptr<const TubeEnvironment> tube_ptr() const { return tube_; }
  const EpisodeConfig& config() const { return config_; }
  const CameraIntrinsics& camera() const { return camera_; }
  const DegradationProfile& profile() const { return profile_; }
  std::uint64_t seed() const { return seed_; }

 private:
  void perceive();
  double min_clearance() const;

  std::shared_ptr<const TubeEnvironment> tube_;
  EpisodeConfig config_;
  CameraIntrinsics camera_;
  DegradationProfile profile_;

  std::uint64_t seed_ = 0;
  TipState state_;
  NavigationTarget target_;
  Observation observation_;
  double u_ = 0.0, v_ = 0.0, rho_ = 0.0;
  int consecutive_invalid_ = 0;
  std::vector<double> reward_history_;
  bool done_ = true;
};

using Controller = std::function<Action(const NavigationEnv&)>;

/// Runs one episode to termination and records every step.
TrajectoryLog run_episode(NavigationEnv& env, const Controller& controller,
                          std::uint64_t seed);

}  // namespace lumennav
