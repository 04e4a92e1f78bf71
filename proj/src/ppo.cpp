#include "lumennav/rl/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "lumennav/reward.hpp"
#include "lumennav/types.hpp"

namespace lumennav::rl {

namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;  // 0.5 * log(2 pi)

Eigen::VectorXd clamp_log_std(const Eigen::VectorXd& s) {
  return s.cwiseMax(kLogStdMin).cwiseMin(kLogStdMax);
}

double clip_to_norm(Eigen::VectorXd& grad, double max_norm) {
  const double norm = grad.norm();
  if (max_norm > 0.0 && norm > max_norm) grad *= max_norm / (norm + 1e-12);
  return norm;
}

}  // namespace

void PpoConfig::validate() const {
  if (!(gamma > 0.0 && gamma <= 1.0)) throw std::invalid_argument("gamma must be in (0, 1]");
  if (!(gae_lambda >= 0.0 && gae_lambda <= 1.0)) {
    throw std::invalid_argument("gae_lambda must be in [0, 1]");
  }
  if (!(clip_epsilon > 0.0 && clip_epsilon < 1.0)) {
    throw std::invalid_argument("clip_epsilon must be in (0, 1)");
  }
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be positive");
  if (minibatch_size < 1) throw std::invalid_argument("minibatch_size must be >= 1");
  if (epochs_per_update < 1) throw std::invalid_argument("epochs_per_update must be >= 1");
  if (steps_per_update < 1) throw std::invalid_argument("steps_per_update must be >= 1");
  if (total_steps < 1) throw std::invalid_argument("total_steps must be >= 1");
  if (entropy_coef < 0.0 || value_coef < 0.0 || max_grad_norm < 0.0) {
    throw std::invalid_argument("loss coefficients must be non-negative");
  }
  if (hidden.empty()) throw std::invalid_argument("hidden layer list is empty");
  for (int h : hidden) {
    if (h < 1) throw std::invalid_argument("hidden widths must be positive");
  }
  if (num_envs < 1 || workers < 1) throw std::invalid_argument("num_envs and workers must be >= 1");
  if (!(initial_log_std >= kLogStdMin && initial_log_std <= kLogStdMax)) {
    throw std::invalid_argument("initial_log_std outside [-5, 2]");
  }
}

// ---------------------------------------------------------------------------

GaussianPolicy::GaussianPolicy(int obs_dim, int action_dim, const std::vector<int>& hidden,
                               bool d2rl)
    : net_(obs_dim, hidden, action_dim, d2rl), log_std_(Eigen::VectorXd::Zero(action_dim)) {}

void GaussianPolicy::initialize(std::mt19937_64& rng, double initial_log_std, double head_gain) {
  net_.initialize(rng, 1.0, head_gain);
  log_std_.setConstant(std::clamp(initial_log_std, kLogStdMin, kLogStdMax));
}

GaussianPolicy::Output GaussianPolicy::forward(const Eigen::VectorXd& obs) const {
  return {net_.forward(obs).col(0), log_std()};
}

Eigen::VectorXd GaussianPolicy::log_std() const { return clamp_log_std(log_std_); }

ValueFunction::ValueFunction(int obs_dim, const std::vector<int>& hidden, bool d2rl)
    : net_(obs_dim, hidden, 1, d2rl) {}

void ValueFunction::initialize(std::mt19937_64& rng) { net_.initialize(rng, 1.0, 1.0); }

double ValueFunction::forward(const Eigen::VectorXd& obs) const {
  return net_.forward(obs)(0, 0);
}

double gaussian_log_prob(const Eigen::VectorXd& x, const Eigen::VectorXd& mean,
                         const Eigen::VectorXd& log_std) {
  const Eigen::ArrayXd z = (x - mean).array() / log_std.array().exp();
  return (-0.5 * z.square() - log_std.array() - kHalfLog2Pi).sum();
}

ActionSample sample_action(const Eigen::VectorXd& mean, const Eigen::VectorXd& log_std,
                           std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  ActionSample out;
  out.raw.resize(mean.size());
  for (Eigen::Index i = 0; i < mean.size(); ++i) {
    out.raw[i] = mean[i] + std::exp(log_std[i]) * normal(rng);
  }
  out.clamped = out.raw.cwiseMax(-1.0).cwiseMin(1.0);
  out.log_prob = gaussian_log_prob(out.raw, mean, log_std);
  return out;
}

Eigen::VectorXd act_deterministic(const GaussianPolicy& policy, const Eigen::VectorXd& obs) {
  return policy.forward(obs).mean.cwiseMax(-1.0).cwiseMin(1.0);
}

// ---------------------------------------------------------------------------

GaeResult compute_gae(const Eigen::VectorXd& rewards, const Eigen::VectorXd& values,
                      const std::vector<bool>& dones, double gamma, double lambda) {
  const Eigen::Index n = rewards.size();
  if (values.size() != n + 1 || static_cast<Eigen::Index>(dones.size()) != n) {
    throw std::invalid_argument("compute_gae: rewards, values (n + 1) and dones misaligned");
  }
  GaeResult out;
  out.advantages.resize(n);
  double next = 0.0;
  for (Eigen::Index t = n - 1; t >= 0; --t) {
    const double live = dones[t] ? 0.0 : 1.0;
    const double delta = rewards[t] + gamma * values[t + 1] * live - values[t];
    next = delta + gamma * lambda * live * next;
    out.advantages[t] = next;
  }
  out.returns = out.advantages + values.head(n);
  return out;
}

void normalize_advantages(Eigen::VectorXd& advantages) {
  if (advantages.size() == 0) return;
  const double mean = advantages.mean();
  advantages.array() -= mean;
  const double var = advantages.squaredNorm() / static_cast<double>(advantages.size());
  const double sd = std::sqrt(var);
  if (sd > 1e-12) advantages /= sd;
  else advantages.setZero();
}

// ---------------------------------------------------------------------------

void AdamState::resize(Eigen::Index n) {
  m = Eigen::VectorXd::Zero(n);
  v = Eigen::VectorXd::Zero(n);
  t = 0;
}

void AdamState::apply(Eigen::VectorXd& params, const Eigen::VectorXd& grad, double lr) {
  if (m.size() != params.size()) resize(params.size());
  ++t;
  m = beta1 * m + (1.0 - beta1) * grad;
  v = beta2 * v + (1.0 - beta2) * grad.cwiseProduct(grad);
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t));
  params.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
}

ActorCritic::ActorCritic(const PpoConfig& config, std::mt19937_64& rng)
    : policy(kObservationDim, kActionDim, config.hidden, config.d2rl),
      value(kObservationDim, config.hidden, config.d2rl) {
  policy.initialize(rng, config.initial_log_std);
  value.initialize(rng);
  actor_opt.resize(policy.net().parameter_count() + kActionDim);
  critic_opt.resize(value.net().parameter_count());
}

Eigen::VectorXd ActorCritic::actor_parameters() const {
  const auto& p = policy.net().parameters();
  Eigen::VectorXd flat(p.size() + policy.log_std_param().size());
  flat << p, policy.log_std_param();
  return flat;
}

void ActorCritic::set_actor_parameters(const Eigen::VectorXd& flat) {
  auto& p = policy.net().parameters();
  p = flat.head(p.size());
  policy.log_std_param() = clamp_log_std(flat.tail(policy.log_std_param().size()));
}

bool ActorCritic::finite() const {
  return policy.net().parameters().allFinite() && policy.log_std_param().allFinite() &&
         value.net().parameters().allFinite();
}

// ---------------------------------------------------------------------------

double clipped_surrogate(double ratio, double advantage, double clip_epsilon) {
  const double clipped = std::clamp(ratio, 1.0 - clip_epsilon, 1.0 + clip_epsilon);
  return std::min(ratio * advantage, clipped * advantage);
}

PpoLosses ppo_losses(const ActorCritic& model, const Matrix& obs, const Matrix& actions,
                     const Vector& old_log_probs, const Vector& advantages,
                     const Vector& returns, const PpoConfig& config,
                     Eigen::VectorXd* actor_grad, Eigen::VectorXd* critic_grad) {
  const Eigen::Index batch = obs.cols();
  if (batch == 0) throw std::invalid_argument("empty minibatch");
  const double inv_b = 1.0 / static_cast<double>(batch);
  const auto& actor = model.policy.net();
  const auto& critic = model.value.net();
  const Eigen::VectorXd log_std = model.policy.log_std();
  const Eigen::ArrayXd inv_var = (-2.0 * log_std.array()).exp();
  const Eigen::Index adim = log_std.size();

  PpoLosses out;

  Mlp<double>::Tape actor_tape;
  const Matrix mean = actor.forward(obs, actor_tape);
  Matrix d_mean = Matrix::Zero(adim, batch);
  Eigen::VectorXd d_log_std = Eigen::VectorXd::Zero(adim);
  long clipped = 0;
  for (Eigen::Index i = 0; i < batch; ++i) {
    const Eigen::ArrayXd diff = (actions.col(i) - mean.col(i)).array();
    const double logp = (-0.5 * diff.square() * inv_var - log_std.array() - kHalfLog2Pi).sum();
    const double ratio = std::exp(logp - old_log_probs[i]);
    const double a = advantages[i];
    const double unclipped = ratio * a;
    const double surrogate = clipped_surrogate(ratio, a, config.clip_epsilon);
    out.actor_loss -= surrogate * inv_b;
    if (std::abs(ratio - 1.0) > config.clip_epsilon) ++clipped;
    // The gradient flows only through the unclipped branch when it is the minimum.
    if (unclipped <= surrogate) {
      const double g = -a * ratio * inv_b;  // dL/dlogp
      d_mean.col(i) = g * (diff * inv_var).matrix();
      d_log_std.array() += g * (diff.square() * inv_var - 1.0);
    }
  }
  out.entropy = (log_std.array() + 0.5 + kHalfLog2Pi).sum();
  out.actor_loss -= config.entropy_coef * out.entropy;
  d_log_std.array() -= config.entropy_coef;
  out.clip_fraction = static_cast<double>(clipped) * inv_b;

  Mlp<double>::Tape critic_tape;
  const Matrix values = critic.forward(obs, critic_tape);
  const Eigen::RowVectorXd err = values.row(0) - returns.transpose();
  out.critic_loss = err.squaredNorm() * inv_b;

  if (actor_grad) {
    const Eigen::Index p = actor.parameter_count();
    actor_grad->setZero(p + adim);
    Eigen::VectorXd net_grad = Eigen::VectorXd::Zero(p);
    actor.backward(actor_tape, d_mean, net_grad);
    actor_grad->head(p) = net_grad;
    // log-std gradient vanishes where the clamp is active
    for (Eigen::Index k = 0; k < adim; ++k) {
      const double raw = model.policy.log_std_param()[k];
      (*actor_grad)[p + k] = (raw > kLogStdMin && raw < kLogStdMax) ? d_log_std[k] : 0.0;
    }
  }
  if (critic_grad) {
    critic_grad->setZero(critic.parameter_count());
    const Matrix d_value = (2.0 * config.value_coef * inv_b) * err;
    critic.backward(critic_tape, d_value, *critic_grad);
  }
  return out;
}

UpdateReport ppo_update(RolloutBuffer& buffer, ActorCritic& model, const PpoConfig& config,
                        std::mt19937_64& rng) {
  if (!buffer.finalized) {
    throw std::logic_error("ppo_update needs a finalized buffer with advantages");
  }
  const Eigen::Index n = buffer.size();
  if (n == 0) throw std::invalid_argument("empty rollout buffer");
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  const Eigen::Index mb = std::min<Eigen::Index>(config.minibatch_size, n);

  UpdateReport report;
  Eigen::VectorXd actor_grad, critic_grad;
  for (int epoch = 0; epoch < config.epochs_per_update; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (Eigen::Index start = 0; start < n; start += mb) {
      const Eigen::Index len = std::min(mb, n - start);
      Matrix obs(buffer.observations.rows(), len);
      Matrix act(buffer.actions.rows(), len);
      Vector logp(len), adv(len), ret(len);
      for (Eigen::Index j = 0; j < len; ++j) {
        const Eigen::Index k = order[static_cast<std::size_t>(start + j)];
        obs.col(j) = buffer.observations.col(k);
        act.col(j) = buffer.actions.col(k);
        logp[j] = buffer.log_probs[k];
        adv[j] = buffer.advantages[k];
        ret[j] = buffer.returns[k];
      }
      const PpoLosses losses =
          ppo_losses(model, obs, act, logp, adv, ret, config, &actor_grad, &critic_grad);
      if (!std::isfinite(losses.actor_loss) || !std::isfinite(losses.critic_loss) ||
          !actor_grad.allFinite() || !critic_grad.allFinite()) {
        std::ostringstream msg;
        msg << "non-finite PPO loss at epoch " << epoch << ", minibatch offset " << start
            << " (actor " << losses.actor_loss << ", critic " << losses.critic_loss << ")";
        throw std::runtime_error(msg.str());
      }
      report.actor_grad_norm += clip_to_norm(actor_grad, config.max_grad_norm);
      report.critic_grad_norm += clip_to_norm(critic_grad, config.max_grad_norm);

      Eigen::VectorXd actor_params = model.actor_parameters();
      model.actor_opt.apply(actor_params, actor_grad, config.learning_rate);
      model.set_actor_parameters(actor_params);
      model.critic_opt.apply(model.value.net().parameters(), critic_grad, config.learning_rate);

      report.actor_loss += losses.actor_loss;
      report.critic_loss += losses.critic_loss;
      report.entropy += losses.entropy;
      report.clip_fraction += losses.clip_fraction;
      ++report.minibatches;
    }
  }
  if (!model.finite()) throw std::runtime_error("non-finite parameters after PPO update");
  const double k = 1.0 / report.minibatches;
  report.actor_loss *= k;
  report.critic_loss *= k;
  report.entropy *= k;
  report.clip_fraction *= k;
  report.actor_grad_norm *= k;
  report.critic_grad_norm *= k;
  return report;
}

// ---------------------------------------------------------------------------

namespace {

struct EnvSlot {
  std::unique_ptr<RlEnvironment> env;
  Eigen::VectorXd obs;
  double episode_return = 0.0;
  // per-update segment
  std::vector<Eigen::VectorXd> obs_seq;
  std::vector<Eigen::VectorXd> act_seq;
  std::vector<double> logp_seq, reward_seq, value_seq;
  std::vector<bool> done_seq;
  Eigen::VectorXd pending_action;
  RlStep pending_step;
};

}  // namespace

TrainResult train(const EnvFactory& factory, const PpoConfig& config, std::uint64_t seed,
                  const UpdateCallback& on_update) {
  config.validate();
  std::mt19937_64 rng(mix_seed(seed, 0xA11CEu));
  TrainResult result;
  result.model = ActorCritic(config, rng);
  ActorCritic& model = result.model;

  std::uint64_t episode_counter = 0;
  std::vector<EnvSlot> slots(static_cast<std::size_t>(config.num_envs));
  for (std::size_t i = 0; i < slots.size(); ++i) {
    slots[i].env = factory(static_cast<int>(i));
    if (!slots[i].env) throw std::runtime_error("environment factory returned null");
    slots[i].obs = slots[i].env->reset(mix_seed(seed, episode_counter++));
  }
  const int per_env =
      (config.steps_per_update + config.num_envs - 1) / config.num_envs;
  const int workers = std::min(config.workers, config.num_envs);

  auto step_all = [&]() {
    auto run = [&](std::size_t begin, std::size_t end) {
      for (std::size_t i = begin; i < end; ++i) {
        slots[i].pending_step = slots[i].env->step(slots[i].pending_action);
      }
    };
    if (workers <= 1) {
      run(0, slots.size());
      return;
    }
    std::vector<std::thread> pool;
    const std::size_t chunk = (slots.size() + workers - 1) / workers;
    for (std::size_t b = 0; b < slots.size(); b += chunk) {
      pool.emplace_back(run, b, std::min(slots.size(), b + chunk));
    }
    for (auto& t : pool) t.join();
  };

  int update = 0;
  while (result.steps < config.total_steps) {
    for (auto& s : slots) {
      s.obs_seq.clear();
      s.act_seq.clear();
      s.logp_seq.clear();
      s.reward_seq.clear();
      s.value_seq.clear();
      s.done_seq.clear();
    }
    int episodes = 0, successes = 0, collisions = 0;
    double return_sum = 0.0;

    for (int t = 0; t < per_env; ++t) {
      for (auto& s : slots) {
        const auto out = model.policy.forward(s.obs);
        const ActionSample a = sample_action(out.mean, out.log_std, rng);
        s.obs_seq.push_back(s.obs);
        s.act_seq.push_back(a.raw);
        s.logp_seq.push_back(a.log_prob);
        s.value_seq.push_back(model.value.forward(s.obs));
        s.pending_action = a.clamped;
      }
      step_all();
      for (auto& s : slots) {
        const RlStep& st = s.pending_step;
        s.reward_seq.push_back(st.reward);
        s.done_seq.push_back(st.done);
        s.episode_return += st.reward;
        if (st.done) {
          ++episodes;
          return_sum += s.episode_return;
          s.episode_return = 0.0;
          if (st.reason == DoneReason::goal_reached || st.reason == DoneReason::success) {
            ++successes;
          }
          if (st.reason == DoneReason::collision) ++collisions;
          s.obs = s.env->reset(mix_seed(seed, episode_counter++));
        } else {
          s.obs = st.observation;
        }
      }
    }

    const Eigen::Index total = static_cast<Eigen::Index>(per_env) * config.num_envs;
    RolloutBuffer buffer;
    buffer.observations.resize(kObservationDim, total);
    buffer.actions.resize(kActionDim, total);
    buffer.log_probs.resize(total);
    buffer.rewards.resize(total);
    buffer.values.resize(total + 1);
    buffer.advantages.resize(total);
    buffer.returns.resize(total);
    buffer.dones.assign(static_cast<std::size_t>(total), false);
    Eigen::Index k = 0;
    for (auto& s : slots) {
      Eigen::VectorXd rewards(per_env), values(per_env + 1);
      for (int t = 0; t < per_env; ++t) {
        buffer.observations.col(k + t) = s.obs_seq[t];
        buffer.actions.col(k + t) = s.act_seq[t];
        buffer.log_probs[k + t] = s.logp_seq[t];
        buffer.dones[static_cast<std::size_t>(k + t)] = s.done_seq[t];
        rewards[t] = s.reward_seq[t];
        values[t] = s.value_seq[t];
      }
      values[per_env] = model.value.forward(s.obs);
      const GaeResult gae = compute_gae(rewards, values, s.done_seq, config.gamma,
                                        config.gae_lambda);
      buffer.rewards.segment(k, per_env) = rewards;
      buffer.values.segment(k, per_env) = values.head(per_env);
      buffer.advantages.segment(k, per_env) = gae.advantages;
      buffer.returns.segment(k, per_env) = gae.returns;
      k += per_env;
    }
    buffer.values[total] = 0.0;
    normalize_advantages(buffer.advantages);
    buffer.finalized = true;

    const UpdateReport report = ppo_update(buffer, model, config, rng);
    result.steps += total;
    ++update;

    CurvePoint point;
    point.update = update;
    point.steps = result.steps;
    point.mean_reward = buffer.rewards.mean();
    point.episodes = episodes;
    if (episodes > 0) {
      point.success_rate = static_cast<double>(successes) / episodes;
      point.collision_rate = static_cast<double>(collisions) / episodes;
      point.mean_episode_return = return_sum / episodes;
    }
    result.curve.push_back(point);
    if (on_update) on_update(point, report);
  }
  std::ostringstream state;
  state << rng;
  result.rng_state = state.str();
  return result;
}

// ---------------------------------------------------------------------------

Eigen::VectorXd CenteringToyEnv::reset(std::uint64_t seed) {
  rng_.seed(seed);
  std::uniform_real_distribution<double> start(-1.0, 1.0);
  x_ = start(rng_);
  t_ = 0;
  return observe();
}

RlStep CenteringToyEnv::step(const Eigen::VectorXd& action) {
  const double a = std::isnan(action[0]) ? 0.0 : std::clamp(action[0], -1.0, 1.0);
  x_ = std::clamp(x_ - 0.1 * a, -1.0, 1.0);
  ++t_;
  RlStep out;
  out.observation = observe();
  out.reward = reward_distance(x_, 0.0);
  out.done = t_ >= horizon_;
  out.reason = out.done ? DoneReason::horizon : DoneReason::none;
  return out;
}

Eigen::VectorXd CenteringToyEnv::observe() const {
  Eigen::VectorXd o(kObservationDim);
  o << x_, 0.0, x_, 0.0;
  return o;
}

// ---------------------------------------------------------------------------

GradientCheckResult gradient_check(const Mlp<double>& net, const Matrix& probe_inputs,
                                   const Matrix& output_weights, int probe_count,
                                   std::mt19937_64& rng) {
  if (output_weights.rows() != net.output_dim() || output_weights.cols() != probe_inputs.cols()) {
    throw std::invalid_argument("gradient_check: output weights do not match the outputs");
  }
  auto loss = [&](const Mlp<double>& m) {
    return (m.forward(probe_inputs).array() * output_weights.array()).sum();
  };
  Mlp<double>::Tape tape;
  net.forward(probe_inputs, tape);
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(net.parameter_count());
  net.backward(tape, output_weights, grad);

  std::vector<int> indices;
  std::uniform_int_distribution<int> pick(0, net.parameter_count() - 1);
  for (int i = 0; i < probe_count; ++i) indices.push_back(pick(rng));
  const auto head_bias = net.bias(net.layer_count() - 1);
  const int head_offset = static_cast<int>(head_bias.data() - net.parameters().data());
  for (int i = 0; i < net.output_dim(); ++i) indices.push_back(head_offset + i);

  GradientCheckResult out;
  Mlp<double> probe = net;
  for (int idx : indices) {
    double& theta = probe.parameters()[idx];
    const double saved = theta;
    const double h = 1e-4 * std::max(1.0, std::abs(saved));
    theta = saved + h;
    const double up = loss(probe);
    theta = saved - h;
    const double down = loss(probe);
    theta = saved;
    const double numeric = (up - down) / (2.0 * h);
    const double analytic = grad[idx];
    const double scale = std::max({std::abs(numeric), std::abs(analytic), 1e-6});
    out.max_relative_error = std::max(out.max_relative_error, std::abs(numeric - analytic) / scale);
    ++out.checked;
  }
  return out;
}

}  // namespace lumennav::rl
