#pragma once

#include <span>
#include <string>

namespace lumennav {

inline constexpr double kDefaultEpsilon = 1e-6;
inline constexpr double kSuccessReward = 300.0;
inline constexpr double kStepPenalty = -0.015;
inline constexpr double kStabilityPenalty = -0.5;

/// 1 - sqrt(u^2 + v^2 + eps)
double reward_distance(double u, double v, double epsilon = kDefaultEpsilon);

/// (a_lr u + a_ud v) / sqrt(u^2 + v^2 + eps); not bounded by 1 when |a| > 1.
double reward_direction(double a_lr, double a_ud, double u, double v,
                        double epsilon = kDefaultEpsilon);

/// 300 when |u| < tau and |v| < tau (strict), else 0.
double reward_success(double u, double v, double tau);

double reward_step(bool success);

/// -0.5 when at least `min_nonpositive` of the most recent `window` entries
/// of `history` (oldest first) are <= 0.
double reward_stability(std::span<const double> history, std::size_t window = 10,
                        std::size_t min_nonpositive = 5);

/// Which of the five reward terms are active.
struct RewardTerms {
  bool distance = true;
  bool direction = true;
  bool success = true;
  bool stability = true;
  bool step = true;

  std::string label() const;
  bool operator==(const RewardTerms&) const = default;
};

struct RewardBreakdown {
  double r_dis = 0.0;
  double r_dir = 0.0;
  double r_succ = 0.0;
  double r_step = 0.0;
  double r_penalty = 0.0;
  double total = 0.0;
  double u = 0.0;
  double v = 0.0;
  bool success = false;
};

/// Evaluates every active term and sums them in a fixed order.
RewardBreakdown compute_reward(double u, double v, double a_lr, double a_ud, double tau,
                               std::span<const double> history, std::size_t window,
                               std::size_t min_nonpositive, double epsilon,
                               const RewardTerms& terms = {});

}  // namespace lumennav
