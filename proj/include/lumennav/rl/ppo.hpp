#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "lumennav/rl/mlp.hpp"
#include "lumennav/trajectory.hpp"

namespace lumennav::rl {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline constexpr int kObservationDim = 4;
inline constexpr int kActionDim = 3;
inline constexpr double kLogStdMin = -5.0;
inline constexpr double kLogStdMax = 2.0;

struct PpoConfig {
  double gamma = 0.99;
  double gae_lambda = 0.95;
  double learning_rate = 3e-4;
  int minibatch_size = 16;
  double clip_epsilon = 0.2;
  int epochs_per_update = 4;
  int steps_per_update = 2048;
  long total_steps = 100000;
  double entropy_coef = 0.0;
  double value_coef = 0.5;
  double max_grad_norm = 0.5;

  std::vector<int> hidden = {128, 64};
  bool d2rl = true;
  double initial_log_std = -0.5;
  int num_envs = 1;
  int workers = 1;

  void validate() const;
};

/// Diagonal Gaussian actor: MLP mean head plus a state-independent log-std.
class GaussianPolicy {
 public:
  GaussianPolicy() = default;
  GaussianPolicy(int obs_dim, int action_dim, const std::vector<int>& hidden, bool d2rl);

  void initialize(std::mt19937_64& rng, double initial_log_std, double head_gain = 0.01);

  struct Output {
    Eigen::VectorXd mean;
    Eigen::VectorXd log_std;
  };
  Output forward(const Eigen::VectorXd& obs) const;
  Eigen::VectorXd log_std() const;

  Mlp<double>& net() { return net_; }
  const Mlp<double>& net() const { return net_; }
  Eigen::VectorXd& log_std_param() { return log_std_; }
  const Eigen::VectorXd& log_std_param() const { return log_std_; }

 private:
  Mlp<double> net_;
  Eigen::VectorXd log_std_;
};

class ValueFunction {
 public:
  ValueFunction() = default;
  ValueFunction(int obs_dim, const std::vector<int>& hidden, bool d2rl);
  void initialize(std::mt19937_64& rng);
  double forward(const Eigen::VectorXd& obs) const;
  Mlp<double>& net() { return net_; }
  const Mlp<double>& net() const { return net_; }

 private:
  Mlp<double> net_;
};

struct ActionSample {
  Eigen::VectorXd raw;      // pre-clamp Gaussian draw
  Eigen::VectorXd clamped;  // in [-1, 1]
  double log_prob = 0.0;    // of the raw draw
};

double gaussian_log_prob(const Eigen::VectorXd& x, const Eigen::VectorXd& mean,
                         const Eigen::VectorXd& log_std);

ActionSample sample_action(const Eigen::VectorXd& mean, const Eigen::VectorXd& log_std,
                           std::mt19937_64& rng);

struct GaeResult {
  Eigen::VectorXd advantages;
  Eigen::VectorXd returns;
};

/// `values` has one more entry than `rewards`: the bootstrap value of the
/// state after the last step. dones[t] marks the end of an episode at step t.
GaeResult compute_gae(const Eigen::VectorXd& rewards, const Eigen::VectorXd& values,
                      const std::vector<bool>& dones, double gamma, double lambda);

/// In-place (x - mean) / std; leaves a constant vector at zero.
void normalize_advantages(Eigen::VectorXd& advantages);

struct RolloutBuffer {
  Matrix observations;  // obs_dim x T
  Matrix actions;       // action_dim x T (raw draws)
  Vector log_probs;
  Vector rewards;
  Vector values;  // T + 1 entries, last is the bootstrap value
  std::vector<bool> dones;
  Vector advantages;
  Vector returns;
  bool finalized = false;

  Eigen::Index size() const { return rewards.size(); }
};

/// Adam with bias correction over one flat parameter vector.
struct AdamState {
  Eigen::VectorXd m;
  Eigen::VectorXd v;
  long t = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  void resize(Eigen::Index n);
  void apply(Eigen::VectorXd& params, const Eigen::VectorXd& grad, double lr);
};

struct ActorCritic {
  GaussianPolicy policy;
  ValueFunction value;
  AdamState actor_opt;   // over [policy net params, log_std]
  AdamState critic_opt;  // over value net params

  ActorCritic() = default;
  ActorCritic(const PpoConfig& config, std::mt19937_64& rng);

  Eigen::VectorXd actor_parameters() const;
  void set_actor_parameters(const Eigen::VectorXd& flat);
  bool finite() const;
};

struct PpoLosses {
  double actor_loss = 0.0;
  double critic_loss = 0.0;
  double entropy = 0.0;
  double clip_fraction = 0.0;
};

/// Clipped surrogate and value loss on one minibatch, with gradients
/// accumulated into the flat actor ([net params, log_std]) and critic
/// gradient vectors.
PpoLosses ppo_losses(const ActorCritic& model, const Matrix& obs, const Matrix& actions,
                     const Vector& old_log_probs, const Vector& advantages,
                     const Vector& returns, const PpoConfig& config,
                     Eigen::VectorXd* actor_grad, Eigen::VectorXd* critic_grad);

/// min(r A, clip(r, 1 - eps, 1 + eps) A)
double clipped_surrogate(double ratio, double advantage, double clip_epsilon);

struct UpdateReport {
  double actor_loss = 0.0;
  double critic_loss = 0.0;
  double entropy = 0.0;
  double clip_fraction = 0.0;
  double actor_grad_norm = 0.0;
  double critic_grad_norm = 0.0;
  int minibatches = 0;
};

/// Epochs x shuffled minibatches of clipped-PPO updates. Each network's
/// gradient is clipped to max_grad_norm separately. Throws
/// std::runtime_error on a non-finite loss.
UpdateReport ppo_update(RolloutBuffer& buffer, ActorCritic& model, const PpoConfig& config,
                        std::mt19937_64& rng);

// ---------------------------------------------------------------------------
// Training

struct RlStep {
  Eigen::VectorXd observation;
  double reward = 0.0;
  bool done = false;
  DoneReason reason = DoneReason::none;
};

/// Minimal episodic environment interface consumed by the trainer.
class RlEnvironment {
 public:
  virtual ~RlEnvironment() = default;
  virtual Eigen::VectorXd reset(std::uint64_t seed) = 0;
  virtual RlStep step(const Eigen::VectorXd& action) = 0;
};

using EnvFactory = std::function<std::unique_ptr<RlEnvironment>(int index)>;

struct CurvePoint {
  int update = 0;
  long steps = 0;
  double mean_reward = 0.0;  // per-step reward averaged over the rollout
  double success_rate = 0.0;
  double collision_rate = 0.0;
  int episodes = 0;
  double mean_episode_return = 0.0;
};

struct TrainResult {
  ActorCritic model;
  std::vector<CurvePoint> curve;
  std::string rng_state;
  long steps = 0;
};

using UpdateCallback = std::function<void(const CurvePoint&, const UpdateReport&)>;

TrainResult train(const EnvFactory& factory, const PpoConfig& config, std::uint64_t seed,
                  const UpdateCallback& on_update = {});

/// 1-D centering task: observation (x, 0, x, 0), yaw command moves the
/// offset toward zero, reward is the distance term only.
class CenteringToyEnv : public RlEnvironment {
 public:
  explicit CenteringToyEnv(int horizon = 100) : horizon_(horizon) {}
  Eigen::VectorXd reset(std::uint64_t seed) override;
  RlStep step(const Eigen::VectorXd& action) override;
  double offset() const { return x_; }

 private:
  Eigen::VectorXd observe() const;
  int horizon_;
  int t_ = 0;
  double x_ = 0.0;
  std::mt19937_64 rng_;
};

/// Deterministic policy mean, clamped to [-1, 1].
Eigen::VectorXd act_deterministic(const GaussianPolicy& policy, const Eigen::VectorXd& obs);

// ---------------------------------------------------------------------------
// Gradient check

struct GradientCheckResult {
  double max_relative_error = 0.0;
  int checked = 0;
};

/// Compares backprop gradients of the scalar loss sum(c .* y) with
/// central finite differences (step h = 1e-4 * max(1, |theta|)) on
/// `probe_count` parameters chosen at random plus every bias of the head.
GradientCheckResult gradient_check(const Mlp<double>& net, const Matrix& probe_inputs,
                                   const Matrix& output_weights, int probe_count,
                                   std::mt19937_64& rng);

// ---------------------------------------------------------------------------
// Checkpoints

void save_checkpoint(const std::string& path, const ActorCritic& model, const PpoConfig& config,
                     const std::string& config_hash, const std::string& rng_state, long steps);

struct Checkpoint {
  ActorCritic model;
  PpoConfig config;
  std::string config_hash;
  std::string rng_state;
  long steps = 0;
};

Checkpoint load_checkpoint(const std::string& path);

}  // namespace lumennav::rl
