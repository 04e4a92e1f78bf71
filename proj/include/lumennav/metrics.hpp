#pragma once

#include <span>
#include <string>
#include <vector>

#include "lumennav/geometry.hpp"
#include "lumennav/trajectory.hpp"

namespace lumennav {

enum class PathMode {
  excess,   // D_p = max(0, path length - L_c * completion)
  literal,  // D_p = path length
};

std::string to_string(PathMode mode);
PathMode path_mode_from_string(const std::string& name);

struct MetricsReport {
  double d_geo = 0.0;
  double s_nav = 0.0;
  double jerk_index = 0.0;  // mm/s^3
  int n_collisions = 0;
  int n_steps = 0;
  int near_wall_steps = 0;  // clearance below kNearWallClearance
  double path_length = 0.0;
  double centerline_length = 0.0;
  double completion = 0.0;
};

inline constexpr double kNearWallClearance = 3.0;  // mm

/// Mean over steps of rho_i * (1 + 0.5 * |p_i - p^_i| / r_i), where rho_i is
/// the target's distance from the image center over the half diagonal.
double d_geo(const TrajectoryLog& log, const TubeEnvironment& env);

/// 1 - (0.6 N_col / N_step + 0.4 D_p / L_c).
double s_nav(const TrajectoryLog& log, const TubeEnvironment& env,
             PathMode mode = PathMode::excess);

/// Mean magnitude of the third finite difference
/// (x[i+2] - 3 x[i+1] + 3 x[i] - x[i-1]) / dt^3. Needs at least 4 samples.
double jerk_index(std::span<const Vec3> positions, double dt);
double jerk_index(const TrajectoryLog& log);

/// Tip path polyline length through the logged positions.
double path_length(const TrajectoryLog& log);
/// max s* over the log divided by the centerline length.
double completion_fraction(const TrajectoryLog& log, const TubeEnvironment& env);

MetricsReport evaluate(const TrajectoryLog& log, const TubeEnvironment& env,
                       PathMode mode = PathMode::excess);

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
};

struct AggregateReport {
  int episodes = 0;
  MeanStd d_geo, s_nav, jerk_index, n_collisions, completion, path_length, near_wall_steps;
  int collision_free_complete = 0;  // episodes with zero collisions and completion >= 0.95
};

/// Throws std::invalid_argument on an empty list.
AggregateReport aggregate(std::span<const MetricsReport> reports);

struct SummaryRow {
  std::string method;
  AggregateReport report;
};

/// Comparison table with columns method, episodes, D_geo, S_nav, J (mean and
/// std each), collisions, completion.
std::string summary_csv(std::span<const SummaryRow> rows);

/// Top-down (x-y) and side (x-z) projections of the centerline and the tip
/// trajectories, as a standalone SVG document.
std::string trajectory_svg(const TubeEnvironment& env, std::span<const TrajectoryLog> logs,
                           std::span<const std::string> labels = {});

}  // namespace lumennav
