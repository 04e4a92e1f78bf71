#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>

#include "lumennav/rl/ppo.hpp"
#include "oracles.hpp"

using namespace lumennav;
using namespace lumennav::testing;
using namespace lumennav::rl;

namespace {

Eigen::MatrixXd random_matrix(int rows, int cols, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

PpoConfig small_config() {
  PpoConfig c;
  c.hidden = {16, 8};
  c.steps_per_update = 256;
  c.total_steps = 1024;
  return c;
}

}  // namespace

TEST_SUITE("rl") {

TEST_CASE("ELU and its derivative") {
  CHECK(elu(2.0) == 2.0);
  CHECK(elu(-1.0) == doctest::Approx(std::exp(-1.0) - 1.0));
  CHECK(elu_derivative(0.5) == 1.0);
  CHECK(elu_derivative(-2.0) == doctest::Approx(std::exp(-2.0)));
}

TEST_CASE("MLP layout with D2RL concatenation") {
  Mlp<double> plain(4, {128, 64}, 3, false), d2rl(4, {128, 64}, 3, true);
  CHECK(plain.parameter_count() == 4 * 128 + 128 + 128 * 64 + 64 + 64 * 3 + 3);
  CHECK(d2rl.parameter_count() == 4 * 128 + 128 + (128 + 4) * 64 + 64 + 64 * 3 + 3);
  CHECK_THROWS_AS(Mlp<double>(0, {8}, 1, true), std::invalid_argument);
  CHECK_THROWS_AS(plain.forward(Eigen::MatrixXd::Zero(3, 1)), std::invalid_argument);
}

TEST_CASE("MLP is templated on the scalar type") {
  Mlp<float> f(4, {8}, 2, true);
  std::mt19937_64 rng(1);
  f.initialize(rng, 1.0f, 1.0f);
  const Eigen::MatrixXf y = f.forward(Eigen::MatrixXf::Ones(4, 3));
  CHECK(y.rows() == 2);
  CHECK(y.allFinite());
}

TEST_CASE("zero head gives zero mean; forward is deterministic") {
  GaussianPolicy pi(4, 3, {128, 64}, true);
  std::mt19937_64 rng(2);
  pi.initialize(rng, -0.5, 0.0);
  const Eigen::Vector4d obs(0.3, -0.2, 0.1, 0.9);
  const auto out = pi.forward(obs);
  CHECK(out.mean.isZero());
  CHECK(out.log_std.isApproxToConstant(-0.5));
  pi.initialize(rng, -0.5, 1.0);
  CHECK(pi.forward(obs).mean == pi.forward(obs).mean);
}

TEST_CASE("policy output is Lipschitz in the observation") {
  GaussianPolicy pi(4, 3, {128, 64}, true);
  std::mt19937_64 rng(3);
  pi.initialize(rng, 0.0, 1.0);
  const Eigen::MatrixXd probes = random_matrix(4, 50, rng, 0.5);
  // empirical Lipschitz constant from finite differences at step 1e-3
  double L = 0.0;
  for (int i = 0; i < probes.cols(); ++i) {
    for (int k = 0; k < 4; ++k) {
      Eigen::VectorXd a = probes.col(i), b = a;
      b[k] += 1e-3;
      L = std::max(L, (pi.forward(b).mean - pi.forward(a).mean).norm() / 1e-3);
    }
  }
  for (int i = 0; i < probes.cols(); ++i) {
    for (int k = 0; k < 4; ++k) {
      Eigen::VectorXd a = probes.col(i), b = a;
      b[k] += 1e-6;
      CHECK((pi.forward(b).mean - pi.forward(a).mean).norm() <= 1.01 * L * 1e-6);
    }
  }
}

TEST_CASE("log-std is clamped to [-5, 2]") {
  GaussianPolicy pi(4, 3, {8}, true);
  std::mt19937_64 rng(4);
  pi.initialize(rng, 0.0);
  pi.log_std_param() << -9.0, 0.5, 7.0;
  const Eigen::VectorXd ls = pi.log_std();
  CHECK(ls[0] == kLogStdMin);
  CHECK(ls[1] == 0.5);
  CHECK(ls[2] == kLogStdMax);
}

TEST_CASE("Gaussian log density and sampling") {
  const Eigen::Vector3d mean(0.2, -0.4, 0.9), log_std(-0.5, 0.1, -1.0);
  CHECK(gaussian_log_prob(mean, mean, log_std) ==
        doctest::Approx(-log_std.sum() - 1.5 * std::log(2.0 * std::numbers::pi)));
  std::mt19937_64 a(9), b(9);
  const ActionSample sa = sample_action(mean, log_std, a), sb = sample_action(mean, log_std, b);
  CHECK(sa.raw == sb.raw);
  CHECK(sa.log_prob == doctest::Approx(gaussian_log_prob(sa.raw, mean, log_std)));
  CHECK(sa.clamped.cwiseAbs().maxCoeff() <= 1.0);
  const Eigen::Vector3d out_of_range(1.7, -0.3, -2.0), tiny = Eigen::Vector3d::Constant(kLogStdMin);
  const ActionSample degenerate = sample_action(out_of_range, tiny, a);
  CHECK((degenerate.clamped - Eigen::Vector3d(1.0, -0.3, -1.0)).cwiseAbs().maxCoeff() < 0.05);
}

TEST_CASE("gradient check on a linear network is exact") {
  Mlp<double> lin(4, {}, 3, false);
  std::mt19937_64 rng(5);
  lin.initialize(rng, 1.0, 1.0);
  const auto r = gradient_check(lin, random_matrix(4, 8, rng), random_matrix(3, 8, rng), 20, rng);
  CHECK(r.checked >= 20);
  CHECK(r.max_relative_error < 1e-8);
}

TEST_CASE("gradient check on the full actor and critic networks") {
  std::mt19937_64 rng(6);
  for (int outputs : {3, 1}) {
    Mlp<double> net(4, {128, 64}, outputs, true);
    net.initialize(rng, 1.0, 1.0);
    const auto r = gradient_check(net, random_matrix(4, 16, rng), random_matrix(outputs, 16, rng), 50, rng);
    CHECK(r.max_relative_error < 1e-4);
  }
}

TEST_CASE("zero network: only the head bias carries gradient") {
  Mlp<double> net(4, {16, 8}, 2, true);
  Mlp<double>::Tape tape;
  std::mt19937_64 rng(7);
  const Eigen::MatrixXd x = random_matrix(4, 5, rng);
  net.forward(x, tape);
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(net.parameter_count());
  net.backward(tape, Eigen::MatrixXd::Ones(2, 5), grad);
  const auto head = net.bias(net.layer_count() - 1);
  const long off = head.data() - net.parameters().data();
  CHECK(grad.head(off).isZero());
  CHECK(grad.tail(2).isApproxToConstant(5.0));
}

TEST_CASE("backward input gradient matches finite differences") {
  Mlp<double> net(4, {12, 6}, 2, true);
  std::mt19937_64 rng(8);
  net.initialize(rng, 1.0, 1.0);
  const Eigen::MatrixXd x = random_matrix(4, 3, rng), c = random_matrix(2, 3, rng);
  Mlp<double>::Tape tape;
  net.forward(x, tape);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(net.parameter_count());
  const Eigen::MatrixXd dx = net.backward(tape, c, g);
  for (int i = 0; i < x.size(); ++i) {
    Eigen::MatrixXd xp = x, xm = x;
    xp.data()[i] += 1e-6;
    xm.data()[i] -= 1e-6;
    const double fd = ((net.forward(xp).array() - net.forward(xm).array()) * c.array()).sum() / 2e-6;
    CHECK(dx.data()[i] == doctest::Approx(fd).epsilon(1e-6));
  }
}

TEST_CASE("GAE examples") {
  const GaeResult one = compute_gae(Eigen::VectorXd::Constant(1, 1.0), Eigen::VectorXd::Zero(2), {true}, 0.99, 0.95);
  CHECK(one.advantages[0] == 1.0);
  CHECK(one.returns[0] == 1.0);
  const GaeResult zero = compute_gae(Eigen::VectorXd::Zero(5), Eigen::VectorXd::Zero(6), std::vector<bool>(5, false), 0.99, 0.95);
  CHECK(zero.advantages.isZero());
  Eigen::VectorXd r(2), v(3);
  r << 1, 1;
  v << 0.5, 0.5, 0;
  const GaeResult two = compute_gae(r, v, {false, true}, 0.99, 0.95);
  const double d1 = 1.0 - 0.5;
  const double d0 = 1.0 + 0.99 * 0.5 - 0.5;
  CHECK(two.advantages[1] == doctest::Approx(d1).epsilon(1e-15));
  CHECK(two.advantages[0] == doctest::Approx(d0 + 0.99 * 0.95 * d1).epsilon(1e-15));
  CHECK(two.returns[0] == doctest::Approx(two.advantages[0] + 0.5));
  CHECK_THROWS_AS(compute_gae(r, r, {false, true}, 0.99, 0.95), std::invalid_argument);
}

TEST_CASE("GAE matches the unrolled recursion on random episodes") {
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  std::uniform_int_distribution<int> len(1, 8);
  for (int e = 0; e < 20; ++e) {
    const int n = len(rng);
    Eigen::VectorXd r(n), v(n + 1);
    for (int i = 0; i < n; ++i) r[i] = u(rng);
    for (int i = 0; i <= n; ++i) v[i] = u(rng);
    std::vector<bool> d(static_cast<std::size_t>(n), false);
    for (int i = 0; i < n; ++i) d[static_cast<std::size_t>(i)] = u(rng) > 1.2;
    d.back() = e % 2 == 0;
    const GaeResult g = compute_gae(r, v, d, 0.99, 0.95);
    const Eigen::VectorXd oracle = unrolled_gae(r, v, d, 0.99, 0.95);
    CHECK((g.advantages - oracle).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((g.returns - (oracle + v.head(n))).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("GAE with lambda 1 and zero values is the discounted return") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::VectorXd r(8);
  for (int i = 0; i < 8; ++i) r[i] = u(rng);
  const GaeResult g = compute_gae(r, Eigen::VectorXd::Zero(9), std::vector<bool>(8, false), 0.9, 1.0);
  for (int t = 0; t < 8; ++t) {
    double s = 0.0;
    for (int k = t; k < 8; ++k) s += std::pow(0.9, k - t) * r[k];
    CHECK(g.advantages[t] == doctest::Approx(s).epsilon(1e-12));
  }
}

TEST_CASE("advantage normalisation") {
  std::mt19937_64 rng(12);
  Eigen::VectorXd a = random_matrix(257, 1, rng, 40.0);
  a[3] += 300.0;
  normalize_advantages(a);
  CHECK(std::abs(a.mean()) < 1e-6);
  CHECK(std::abs(std::sqrt(a.squaredNorm() / a.size()) - 1.0) < 1e-6);
  Eigen::VectorXd c = Eigen::VectorXd::Constant(5, 2.0);
  normalize_advantages(c);
  CHECK(c.isZero());
}

TEST_CASE("clipped surrogate arithmetic and bound") {
  CHECK(clipped_surrogate(1.5, 2.0, 0.2) == doctest::Approx(1.2 * 2.0));
  CHECK(clipped_surrogate(0.5, -1.0, 0.2) == doctest::Approx(0.8 * -1.0));
  CHECK(clipped_surrogate(1.1, 3.0, 0.2) == doctest::Approx(1.1 * 3.0));
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> r(0.0, 3.0), a(-5.0, 5.0);
  for (int i = 0; i < 1000; ++i) {
    const double ratio = r(rng), adv = a(rng);
    CHECK(clipped_surrogate(ratio, adv, 0.2) <= ratio * adv + 1e-15);
  }
}

TEST_CASE("first PPO pass has unit ratio and zero actor loss") {
  PpoConfig cfg = small_config();
  std::mt19937_64 rng(14);
  ActorCritic model(cfg, rng);
  const int B = 16;
  const Eigen::MatrixXd obs = random_matrix(4, B, rng, 0.5);
  Eigen::MatrixXd actions(3, B);
  Eigen::VectorXd logp(B);
  for (int i = 0; i < B; ++i) {
    const auto out = model.policy.forward(obs.col(i));
    const ActionSample s = sample_action(out.mean, out.log_std, rng);
    actions.col(i) = s.raw;
    logp[i] = s.log_prob;
  }
  Eigen::VectorXd adv = random_matrix(B, 1, rng);
  normalize_advantages(adv);
  const Eigen::VectorXd ret = random_matrix(B, 1, rng);
  const PpoLosses l = ppo_losses(model, obs, actions, logp, adv, ret, cfg, nullptr, nullptr);
  CHECK(std::abs(l.actor_loss) < 1e-12);
  CHECK(l.clip_fraction == 0.0);
}

TEST_CASE("PPO loss gradients match finite differences") {
  PpoConfig cfg = small_config();
  cfg.entropy_coef = 0.01;
  std::mt19937_64 rng(15);
  ActorCritic model(cfg, rng);
  model.policy.net().initialize(rng, 1.0, 1.0);
  const int B = 8;
  const Eigen::MatrixXd obs = random_matrix(4, B, rng, 0.5);
  const Eigen::MatrixXd actions = random_matrix(3, B, rng, 0.5);
  // old log-probs near the current ones so most samples sit inside the clip range
  Eigen::VectorXd logp(B);
  for (int i = 0; i < B; ++i) {
    const auto out = model.policy.forward(obs.col(i));
    logp[i] = gaussian_log_prob(actions.col(i), out.mean, out.log_std) + 0.05 * (i % 3 - 1);
  }
  const Eigen::VectorXd adv = random_matrix(B, 1, rng), ret = random_matrix(B, 1, rng);
  Eigen::VectorXd ga = Eigen::VectorXd::Zero(model.actor_parameters().size());
  Eigen::VectorXd gc = Eigen::VectorXd::Zero(model.value.net().parameter_count());
  ppo_losses(model, obs, actions, logp, adv, ret, cfg, &ga, &gc);

  const Eigen::VectorXd theta = model.actor_parameters();
  double worst = 0.0;
  for (int k = 0; k < 60; ++k) {
    const int i = k < 3 ? static_cast<int>(theta.size()) - 1 - k : static_cast<int>(rng() % theta.size());
    ActorCritic m = model;
    Eigen::VectorXd t = theta;
    const double h = 1e-6;
    t[i] += h;
    m.set_actor_parameters(t);
    const double lp = ppo_losses(m, obs, actions, logp, adv, ret, cfg, nullptr, nullptr).actor_loss;
    t[i] -= 2 * h;
    m.set_actor_parameters(t);
    const double lm = ppo_losses(m, obs, actions, logp, adv, ret, cfg, nullptr, nullptr).actor_loss;
    const double fd = (lp - lm) / (2 * h);
    worst = std::max(worst, std::abs(fd - ga[i]) / std::max({std::abs(fd), std::abs(ga[i]), 1e-6}));
  }
  CHECK(worst < 1e-4);

  const Eigen::VectorXd phi = model.value.net().parameters();
  worst = 0.0;
  for (int k = 0; k < 40; ++k) {
    const int i = static_cast<int>(rng() % phi.size());
    ActorCritic m = model;
    const double h = 1e-6;
    m.value.net().parameters()[i] = phi[i] + h;
    const double lp = ppo_losses(m, obs, actions, logp, adv, ret, cfg, nullptr, nullptr).critic_loss;
    m.value.net().parameters()[i] = phi[i] - h;
    const double lm = ppo_losses(m, obs, actions, logp, adv, ret, cfg, nullptr, nullptr).critic_loss;
    const double fd = cfg.value_coef * (lp - lm) / (2 * h);
    worst = std::max(worst, std::abs(fd - gc[i]) / std::max({std::abs(fd), std::abs(gc[i]), 1e-6}));
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("Adam takes a learning-rate sized first step") {
  AdamState adam;
  Eigen::VectorXd p = Eigen::VectorXd::Zero(3), g(3);
  g << 2.0, -0.001, 0.0;
  adam.apply(p, g, 0.1);
  CHECK(p[0] == doctest::Approx(-0.1).epsilon(1e-6));
  CHECK(p[1] == doctest::Approx(0.1).epsilon(1e-4));
  CHECK(p[2] == 0.0);
  CHECK(adam.t == 1);
}

TEST_CASE("ppo_update needs a finalised buffer") {
  PpoConfig cfg = small_config();
  std::mt19937_64 rng(16);
  ActorCritic model(cfg, rng);
  RolloutBuffer buf;
  CHECK_THROWS_AS(ppo_update(buf, model, cfg, rng), std::logic_error);
}

TEST_CASE("config validation") {
  PpoConfig c;
  CHECK_NOTHROW(c.validate());
  c.gamma = 0.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = {};
  c.clip_epsilon = 1.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = {};
  c.minibatch_size = 0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}

TEST_CASE("PPO learns the 1-D centering task") {
  PpoConfig cfg;
  cfg.total_steps = 100000;
  const EnvFactory factory = [](int) { return std::make_unique<CenteringToyEnv>(); };
  const TrainResult res = train(factory, cfg, 3);
  CHECK(res.steps <= 100000 + cfg.steps_per_update);
  CHECK(res.model.finite());
  double total = 0.0;
  int n = 0;
  CenteringToyEnv env;
  for (std::uint64_t ep = 0; ep < 20; ++ep) {
    Eigen::VectorXd obs = env.reset(1000 + ep);
    for (;;) {
      const RlStep st = env.step(act_deterministic(res.model.policy, obs));
      total += st.reward;
      ++n;
      obs = st.observation;
      if (st.done) break;
    }
  }
  CHECK(total / n > 0.9);
}

TEST_CASE("training is deterministic and independent of the worker count") {
  PpoConfig cfg = small_config();
  cfg.num_envs = 2;
  const EnvFactory factory = [](int) { return std::make_unique<CenteringToyEnv>(50); };
  const TrainResult a = train(factory, cfg, 21), b = train(factory, cfg, 21);
  cfg.workers = 2;
  const TrainResult c = train(factory, cfg, 21);
  REQUIRE(a.curve.size() == 4);
  for (const TrainResult* other : {&b, &c}) {
    CHECK(other->rng_state == a.rng_state);
    CHECK(other->model.actor_parameters() == a.model.actor_parameters());
    for (std::size_t i = 0; i < a.curve.size(); ++i) CHECK(other->curve[i].mean_reward == a.curve[i].mean_reward);
  }
}

TEST_CASE("checkpoint round trip restores weights, moments and RNG state") {
  PpoConfig cfg = small_config();
  const EnvFactory factory = [](int) { return std::make_unique<CenteringToyEnv>(50); };
  const TrainResult res = train(factory, cfg, 4);
  const auto path = std::filesystem::temp_directory_path() / "lumennav_test_checkpoint.json";
  save_checkpoint(path.string(), res.model, cfg, "abc123", res.rng_state, res.steps);
  const Checkpoint ck = load_checkpoint(path.string());
  CHECK(ck.config_hash == "abc123");
  CHECK(ck.rng_state == res.rng_state);
  CHECK(ck.steps == res.steps);
  CHECK(ck.config.hidden == cfg.hidden);
  CHECK(ck.model.actor_parameters() == res.model.actor_parameters());
  CHECK(ck.model.value.net().parameters() == res.model.value.net().parameters());
  CHECK(ck.model.actor_opt.m == res.model.actor_opt.m);
  CHECK(ck.model.critic_opt.v == res.model.critic_opt.v);
  CHECK(ck.model.actor_opt.t == res.model.actor_opt.t);
  const Eigen::Vector4d obs(0.1, 0.2, -0.3, 0.4);
  CHECK(ck.model.policy.forward(obs).mean == res.model.policy.forward(obs).mean);
  CHECK(ck.model.value.forward(obs) == res.model.value.forward(obs));
  CHECK_THROWS(load_checkpoint("/nonexistent/checkpoint.json"));
}

}  // TEST_SUITE
