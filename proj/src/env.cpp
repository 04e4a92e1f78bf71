#include "lumennav/env.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>

namespace lumennav {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

double clamp_unit(double x) { return std::isnan(x) ? 0.0 : std::clamp(x, -1.0, 1.0); }

}  // namespace

Action Action::clamped() const {
  return {clamp_unit(a_lr), clamp_unit(a_ud), clamp_unit(a_fw)};
}

std::string to_string(ForwardMode mode) {
  switch (mode) {
    case ForwardMode::action:
      return "action";
    case ForwardMode::constant:
      return "constant";
    case ForwardMode::bidirectional:
      return "bidirectional";
  }
  return "action";
}

ForwardMode forward_mode_from_string(const std::string& name) {
  if (name == "action") return ForwardMode::action;
  if (name == "constant") return ForwardMode::constant;
  if (name == "bidirectional") return ForwardMode::bidirectional;
  throw std::invalid_argument("unknown forward mode '" + name + "'");
}

std::string to_string(DoneReason reason) {
  switch (reason) {
    case DoneReason::none:
      return "none";
    case DoneReason::collision:
      return "collision";
    case DoneReason::horizon:
      return "horizon";
    case DoneReason::goal_reached:
      return "goal_reached";
    case DoneReason::target_lost:
      return "target_lost";
    case DoneReason::success:
      return "success";
  }
  return "none";
}

DoneReason done_reason_from_string(const std::string& name) {
  for (DoneReason r : {DoneReason::none, DoneReason::collision, DoneReason::horizon,
                       DoneReason::goal_reached, DoneReason::target_lost, DoneReason::success}) {
    if (to_string(r) == name) return r;
  }
  throw std::invalid_argument("unknown done reason '" + name + "'");
}

void EpisodeConfig::validate() const {
  if (horizon < 1) throw std::invalid_argument("episode horizon must be at least 1");
  if (!(tau > 0.0 && tau < 1.0)) throw std::invalid_argument("tau must lie in (0, 1)");
  if (!(gate_ratio > 0.0 && gate_ratio < 1.0)) {
    throw std::invalid_argument("gate_ratio must lie in (0, 1)");
  }
  if (!(clearance_min >= 0.0)) throw std::invalid_argument("clearance_min must be non-negative");
  if (!(forward_speed >= 0.0)) throw std::invalid_argument("forward_speed must be non-negative");
  if (!(yaw_pitch_scale >= 0.0)) throw std::invalid_argument("yaw_pitch_scale must be non-negative");
  if (stability_window < 1 || stability_count < 1) {
    throw std::invalid_argument("stability window and count must be positive");
  }
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
  if (!(step_period > 0.0)) throw std::invalid_argument("step_period must be positive");
  if (target_lost_frames < 1) throw std::invalid_argument("target_lost_frames must be positive");
  if (!(segment_spacing > 0.0) || n_segments < 0) {
    throw std::invalid_argument("body segments need positive spacing");
  }
  if (!(goal_fraction > 0.0 && goal_fraction <= 1.0)) {
    throw std::invalid_argument("goal_fraction must lie in (0, 1]");
  }
  if (extraction.level < 1 || extraction.level > extraction.n_levels) {
    throw std::invalid_argument("extraction level must lie in [1, n_levels]");
  }
}

std::vector<Vec3> ftl_body(std::span<const Vec3> trace, double segment_spacing,
                           int n_segments) {
  if (trace.empty()) throw std::invalid_argument("ftl_body needs a non-empty trace");
  std::vector<Vec3> body;
  body.reserve(static_cast<std::size_t>(std::max(0, n_segments)));
  std::size_t idx = trace.size() - 1;  // walk backwards from the tip
  double walked = 0.0;                 // path length from tip to trace[idx]
  for (int i = 1; i <= n_segments; ++i) {
    const double behind = i * segment_spacing;
    while (idx > 0) {
      const double seg = (trace[idx] - trace[idx - 1]).norm();
      if (walked + seg >= behind) break;
      walked += seg;
      --idx;
    }
    if (idx == 0) {
      body.push_back(trace.front());
      continue;
    }
    const double seg = (trace[idx] - trace[idx - 1]).norm();
    const double w = seg > 0.0 ? (behind - walked) / seg : 0.0;
    body.push_back(trace[idx] + w * (trace[idx - 1] - trace[idx]));
  }
  return body;
}

DoneReason check_termination(const TerminationInputs& in, const EpisodeConfig& config) {
  if (in.min_clearance < config.clearance_min) return DoneReason::collision;
  if (in.s_star >= config.goal_fraction * in.centerline_length) return DoneReason::goal_reached;
  if (config.success_terminates && in.success_event) return DoneReason::success;
  if (in.consecutive_invalid >= config.target_lost_frames) return DoneReason::target_lost;
  if (in.step_index >= config.horizon) return DoneReason::horizon;
  return DoneReason::none;
}

double target_ratio(const NavigationTarget& target, const CameraIntrinsics& cam) {
  const double cx = 0.5 * cam.width, cy = 0.5 * cam.height;
  return std::hypot(target.t_x - cx, target.t_y - cy) / std::hypot(cx, cy);
}

NavigationEnv::NavigationEnv(std::shared_ptr<const TubeEnvironment> tube, EpisodeConfig config,
                             CameraIntrinsics camera, DegradationProfile profile)
    : tube_(std::move(tube)),
      config_(std::move(config)),
      camera_(camera),
      profile_(profile) {
  if (!tube_) throw std::invalid_argument("navigation environment needs a tube");
  config_.validate();
  camera_.validate();
  profile_.validate();
}

Observation NavigationEnv::reset(std::uint64_t seed) {
  const CenterlineSpline& line = tube_->centerline();
  const double s0 = std::clamp(config_.start_s, 0.0, line.length());
  const Vec3 center = line.point_at(s0);
  const Vec3 tangent = line.tangent_at(s0);
  Pose pose = look_along(center, tangent);
  if (config_.perturb_start) {
    std::mt19937_64 rng(mix_seed(seed, 0x5EEDu));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double phi = 2.0 * std::numbers::pi * unit(rng);
    const double reach = unit(rng) * config_.start_offset_fraction * line.radius_at(s0);
    const Vec3 lateral = std::cos(phi) * pose.right() + std::sin(phi) * pose.down();
    const double tilt = unit(rng) * config_.start_tilt_deg * kDeg;
    const double tilt_phi = 2.0 * std::numbers::pi * unit(rng);
    const Vec3 axis = std::cos(tilt_phi) * pose.right() + std::sin(tilt_phi) * pose.down();
    const Vec3 view = Eigen::AngleAxisd(tilt, axis) * tangent;
    pose = look_along(center + reach * lateral, view, pose.right());
  }
  return reset_to(pose, seed);
}

Observation NavigationEnv::reset_to(const Pose& pose, std::uint64_t seed) {
  if (!(tube_->wall_distance(pose.position) > config_.clearance_min)) {
    throw std::invalid_argument("start pose violates the wall clearance");
  }
  seed_ = seed;
  state_ = TipState{};
  state_.pose = pose;
  state_.pose.orientation.normalize();
  state_.trace.push_back(pose.position);
  state_.trace_length.push_back(0.0);
  reward_history_.clear();
  consecutive_invalid_ = 0;
  target_ = NavigationTarget{};
  observation_ = Observation{};
  u_ = v_ = rho_ = 0.0;
  done_ = false;
  perceive();
  return observation_;
}

void NavigationEnv::perceive() {
  const DepthImage gt = render_depth(*tube_, state_.pose, camera_);
  const std::uint64_t frame_seed =
      profile_.seed_policy == SeedPolicy::per_frame
          ? mix_seed(seed_, static_cast<std::uint64_t>(state_.step_index))
          : mix_seed(seed_, 0xF2F2u);
  const DepthImage pred = degrade_depth(gt, profile_, frame_seed);
  NavigationTarget next;
  if (pred.valid_count() > 0) next = extract_navigation_point(pred, config_.extraction);
  target_ = next;
  if (!next.valid) {
    ++consecutive_invalid_;
    return;
  }
  consecutive_invalid_ = 0;
  observation_ = encode_observation(next, camera_, config_.encoding);
  u_ = (next.t_x - 0.5 * camera_.width) / (0.5 * camera_.width);
  v_ = (next.t_y - 0.5 * camera_.height) / (0.5 * camera_.height);
  rho_ = target_ratio(next, camera_);
}

std::vector<Vec3> NavigationEnv::body() const {
  return ftl_body(state_.trace, config_.segment_spacing, config_.n_segments);
}

double NavigationEnv::min_clearance() const {
  double clearance = tube_->wall_distance(state_.pose.position);
  for (const Vec3& p : body()) clearance = std::min(clearance, tube_->wall_distance(p));
  return clearance;
}

StepOutcome NavigationEnv::step(const Action& action) {
  if (done_) throw std::logic_error("step called on a finished episode; call reset first");
  const Action a = action.clamped();
  StepOutcome out;
  out.info.gate_rho = rho_;
  const double u_t = u_, v_t = v_;

  // steer: yaw about the camera down axis, pitch about the camera right axis
  const double scale = config_.yaw_pitch_scale * kDeg;
  state_.pose.orientation =
      (state_.pose.orientation * Quat(Eigen::AngleAxisd(a.a_lr * scale, Vec3::UnitY())) *
       Quat(Eigen::AngleAxisd(-a.a_ud * scale, Vec3::UnitX())))
          .normalized();

  const bool open = !config_.gating || (target_.valid && rho_ < config_.gate_ratio);
  double advance = 0.0;
  switch (config_.forward_mode) {
    case ForwardMode::action:
      advance = config_.forward_speed * std::max(a.a_fw, 0.0);
      break;
    case ForwardMode::constant:
      advance = config_.forward_speed;
      break;
    case ForwardMode::bidirectional:
      advance = config_.forward_speed * a.a_fw;
      break;
  }
  if (!open) advance = 0.0;
  state_.pose.position += advance * state_.pose.forward();
  state_.trace_length.push_back(state_.trace_length.back() + std::abs(advance));
  state_.trace.push_back(state_.pose.position);
  ++state_.step_index;
  out.info.gated = open;
  out.info.translation = advance;

  out.reward = compute_reward(u_t, v_t, a.a_lr, a.a_ud, config_.tau, reward_history_,
                              static_cast<std::size_t>(config_.stability_window),
                              static_cast<std::size_t>(config_.stability_count),
                              config_.epsilon, config_.rewards);
  reward_history_.push_back(out.reward.total);
  if (reward_history_.size() > static_cast<std::size_t>(config_.stability_window)) {
    reward_history_.erase(reward_history_.begin());
  }

  const double clearance = min_clearance();
  if (clearance > 0.0) perceive();

  TerminationInputs term;
  term.min_clearance = clearance;
  term.step_index = state_.step_index;
  term.s_star = tube_->nearest_on_centerline(state_.pose.position).s_star;
  term.centerline_length = tube_->centerline().length();
  term.consecutive_invalid = consecutive_invalid_;
  term.success_event = out.reward.success;
  out.done_reason = check_termination(term, config_);
  out.done = out.done_reason != DoneReason::none;
  done_ = out.done;

  out.observation = observation_;
  out.info.clearance = clearance;
  out.info.rho = rho_;
  out.info.target_valid = target_.valid;
  out.info.s_star = term.s_star;
  return out;
}

TrajectoryLog run_episode(NavigationEnv& env, const Controller& controller,
                          std::uint64_t seed) {
  TrajectoryLog log;
  log.step_period = env.config().step_period;
  log.seed = seed;
  env.reset(seed);
  while (!env.done()) {
    const Action action = controller(env).clamped();
    const StepOutcome out = env.step(action);
    StepRecord rec;
    rec.step = env.state().step_index;
    rec.t = rec.step * log.step_period;
    rec.tip_position = env.state().pose.position;
    rec.orientation = env.state().pose.orientation;
    rec.action = action.as_vector();
    rec.reward = out.reward;
    rec.u = env.offset_u();
    rec.v = env.offset_v();
    rec.rho = out.info.rho;
    rec.target_valid = out.info.target_valid;
    rec.clearance = out.info.clearance;
    rec.collision = out.info.clearance < env.config().clearance_min;
    rec.gated = out.info.gated;
    rec.gate_rho = out.info.gate_rho;
    rec.translation = out.info.translation;
    rec.done_reason = out.done_reason;
    log.steps.push_back(rec);
  }
  return log;
}

}  // namespace lumennav
