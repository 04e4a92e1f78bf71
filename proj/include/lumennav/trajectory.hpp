#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lumennav/reward.hpp"
#include "lumennav/types.hpp"

namespace lumennav {

enum class DoneReason { none, collision, horizon, goal_reached, target_lost, success };

std::string to_string(DoneReason reason);
DoneReason done_reason_from_string(const std::string& name);

/// One environment step as written to the JSONL trajectory log. Position,
/// orientation and (u, v, rho) describe the state after the step.
struct StepRecord {
  double t = 0.0;  // s
  int step = 0;
  Vec3 tip_position = Vec3::Zero();
  Quat orientation = Quat::Identity();
  Vec3 action = Vec3::Zero();
  RewardBreakdown reward;
  double u = 0.0;
  double v = 0.0;
  double rho = 0.0;
  bool target_valid = false;
  double clearance = 0.0;
  bool collision = false;
  bool gated = false;
  double gate_rho = 0.0;
  double translation = 0.0;
  DoneReason done_reason = DoneReason::none;
};

struct TrajectoryLog {
  std::vector<StepRecord> steps;
  double step_period = 1.0;  // s
  std::uint64_t seed = 0;
  std::string config_hash;
};

}  // namespace lumennav
