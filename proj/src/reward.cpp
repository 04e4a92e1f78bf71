#include "lumennav/reward.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace lumennav {

double reward_distance(double u, double v, double epsilon) {
  return 1.0 - std::sqrt(u * u + v * v + epsilon);
}

double reward_direction(double a_lr, double a_ud, double u, double v, double epsilon) {
  return (a_lr * u + a_ud * v) / std::sqrt(u * u + v * v + epsilon);
}

double reward_success(double u, double v, double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("success tolerance must be positive");
  return (std::abs(u) < tau && std::abs(v) < tau) ? kSuccessReward : 0.0;
}

double reward_step(bool success) { return success ? 0.0 : kStepPenalty; }

double reward_stability(std::span<const double> history, std::size_t window,
                        std::size_t min_nonpositive) {
  const std::size_t n = std::min(window, history.size());
  const auto recent = history.subspan(history.size() - n);
  const auto count = static_cast<std::size_t>(
      std::count_if(recent.begin(), recent.end(), [](double r) { return r <= 0.0; }));
  return count >= min_nonpositive ? kStabilityPenalty : 0.0;
}

std::string RewardTerms::label() const {
  std::string out;
  auto add = [&out](bool on, const char* name) {
    if (!on) return;
    if (!out.empty()) out += "+";
    out += name;
  };
  add(distance, "dis");
  add(direction, "dir");
  add(success, "succ");
  add(stability, "stability");
  add(step, "step");
  return out.empty() ? "none" : out;
}

RewardBreakdown compute_reward(double u, double v, double a_lr, double a_ud, double tau,
                               std::span<const double> history, std::size_t window,
                               std::size_t min_nonpositive, double epsilon,
                               const RewardTerms& terms) {
  RewardBreakdown out;
  out.u = u;
  out.v = v;
  out.success = reward_success(u, v, tau) > 0.0;
  if (terms.distance) out.r_dis = reward_distance(u, v, epsilon);
  if (terms.direction) out.r_dir = reward_direction(a_lr, a_ud, u, v, epsilon);
  if (terms.success) out.r_succ = reward_success(u, v, tau);
  if (terms.step) out.r_step = reward_step(out.success);
  if (terms.stability) out.r_penalty = reward_stability(history, window, min_nonpositive);
  out.total = out.r_dis + out.r_dir + out.r_succ + out.r_step + out.r_penalty;
  return out;
}

}  // namespace lumennav
