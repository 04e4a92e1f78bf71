#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "lumennav/env.hpp"
#include "lumennav/metrics.hpp"
#include "lumennav/rl/ppo.hpp"
#include "lumennav/serialization.hpp"

namespace lumennav {

/// Which environments a training run draws episodes from.
struct TrainingSetup {
  ProfileTag profile = ProfileTag::simple;
  int pool_size = 8;               // generated environments
  std::uint64_t pool_seed = 1000;  // seeds pool_seed .. pool_seed + pool_size - 1
};

struct EvaluationSetup {
  ProfileTag profile = ProfileTag::complex;
  int episodes = 10;
  std::uint64_t env_seed = 5000;  // held-out seeds env_seed .. env_seed + episodes - 1
  int horizon = 2500;             // evaluation episodes run to the goal, not the training horizon
  PathMode path_mode = PathMode::excess;
};

/// Merged configuration tree for every subcommand.
struct RunConfig {
  CameraIntrinsics camera;
  DegradationProfile degradation;
  EpisodeConfig episode;
  rl::PpoConfig ppo;
  TrainingSetup training;
  EvaluationSetup evaluation;

  /// Checks every section; throws std::invalid_argument.
  void validate() const;
  /// FNV-1a 64 of the canonical JSON dump without ppo.workers, 16 hex digits.
  std::string hash() const;
};

void to_json(Json& j, const RunConfig& c);
/// Applies the keys present in `j` on top of `c` (unknown keys are errors).
void merge_json(const Json& j, RunConfig& c);

RunConfig load_run_config(const std::filesystem::path& path);

/// Applies a dotted override such as "ppo.total_steps=50000" (value parsed as JSON,
/// falling back to a string).
void apply_override(RunConfig& c, const std::string& assignment);

std::string fnv1a_hex(const std::string& data);

using TubePool = std::vector<std::shared_ptr<const TubeEnvironment>>;

TubePool generate_pool(ProfileTag profile, int count, std::uint64_t first_seed);

/// PPO on NavigationRlEnv instances drawing from `pool`.
rl::TrainResult train_navigation(const RunConfig& config, const TubePool& pool,
                                 std::uint64_t seed,
                                 const rl::UpdateCallback& on_update = {});

std::string curve_csv(const std::vector<rl::CurvePoint>& curve, const std::string& config_hash,
                      std::uint64_t seed);

struct PolicyEvaluation {
  std::vector<TrajectoryLog> logs;
  std::vector<MetricsReport> reports;
  AggregateReport aggregate;
};

/// One episode per tube with the given controller factory, using the
/// evaluation horizon.
PolicyEvaluation evaluate_controller(const RunConfig& config, const TubePool& tubes,
                                     const std::function<Controller()>& make_controller,
                                     std::uint64_t seed, const EpisodeConfig* override = nullptr);

struct AblationRow {
  std::string label;
  RewardTerms terms;
  AggregateReport report;
  double final_mean_reward = 0.0;
};

/// The five cumulative reward subsets: dis, +dir, +succ, +stability, +step.
std::vector<RewardTerms> ablation_stack();

/// Trains one policy per cumulative subset and evaluates each on `eval_tubes`.
std::vector<AblationRow> run_ablation(const RunConfig& config, const TubePool& train_pool,
                                      const TubePool& eval_tubes, std::uint64_t seed,
                                      const std::function<void(const std::string&)>& progress = {});

std::string ablation_csv(const std::vector<AblationRow>& rows, const std::string& config_hash,
                         std::uint64_t seed);

Json metrics_json(const MetricsReport& m);
Json aggregate_json(const AggregateReport& a);

}  // namespace lumennav
