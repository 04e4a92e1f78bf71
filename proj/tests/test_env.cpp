#include <doctest.h>

#include <cmath>
#include <memory>
#include <random>

#include "lumennav/baselines.hpp"
#include "lumennav/env.hpp"
#include "lumennav/metrics.hpp"
#include "reward_cases.hpp"
#include "oracles.hpp"

using namespace lumennav;
using namespace lumennav::testing;

namespace {

CameraIntrinsics small_camera(int size = 32) {
  CameraIntrinsics cam;
  cam.width = cam.height = size;
  return cam;
}

std::shared_ptr<const TubeEnvironment> straight(double length = 600.0) {
  return std::make_shared<const TubeEnvironment>(make_straight_tube(length, 20.0, 300.0));
}

}  // namespace

TEST_SUITE("reward") {

TEST_CASE("reward formula table") {
  for (const auto& c : testing::reward_cases()) {
    CAPTURE(c.name);
    CHECK(std::abs(c.evaluate() - c.expected) <= 1e-12);
  }
  CHECK(testing::reward_cases().size() >= 20);
}

TEST_CASE("success tolerance must be positive") {
  CHECK_THROWS_AS(reward_success(0, 0, 0.0), std::invalid_argument);
}

TEST_CASE("compute_reward sums the active terms in a fixed order") {
  const std::vector<double> history = {-1, -1, -1, -1, -1};
  const RewardBreakdown all = compute_reward(0.05, 0.03, 0.4, -0.2, 0.1, history, 10, 5, 1e-6);
  CHECK(all.success);
  CHECK(all.r_succ == 300.0);
  CHECK(all.r_step == 0.0);
  CHECK(all.r_penalty == -0.5);
  CHECK(all.total == all.r_dis + all.r_dir + all.r_succ + all.r_step + all.r_penalty);
  RewardTerms only_dis{true, false, false, false, false};
  const RewardBreakdown d = compute_reward(0.5, 0.5, 1, 1, 0.1, history, 10, 5, 1e-6, only_dis);
  CHECK(d.total == reward_distance(0.5, 0.5));
  CHECK(d.r_dir == 0.0);
  CHECK(d.r_penalty == 0.0);
  CHECK(only_dis.label() == "dis");
  CHECK(RewardTerms{}.label() == "dis+dir+succ+stability+step");
}

TEST_CASE("direction reward grows as the action turns toward the offset") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    const double ou = u(rng), ov = u(rng);
    const double n = std::hypot(ou, ov);
    double a = u(rng), b = u(rng);
    double prev = reward_direction(a, b, ou, ov);
    for (int k = 0; k < 10; ++k) {
      a += 0.1 * ou / n;
      b += 0.1 * ov / n;
      const double next = reward_direction(a, b, ou, ov);
      CHECK(next >= prev);
      prev = next;
    }
  }
}

}  // TEST_SUITE

TEST_SUITE("env") {

TEST_CASE("actions are clamped, NaN becomes zero") {
  const Action a = Action{2.0, -3.0, std::nan("")}.clamped();
  CHECK(a.a_lr == 1.0);
  CHECK(a.a_ud == -1.0);
  CHECK(a.a_fw == 0.0);
}

TEST_CASE("episode config validation") {
  EpisodeConfig c;
  CHECK_NOTHROW(c.validate());
  c.horizon = 0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = {};
  c.tau = 1.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = {};
  c.gate_ratio = 0.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = {};
  c.extraction.level = 0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}

TEST_CASE("termination examples and priority") {
  EpisodeConfig c;
  c.horizon = 100;
  TerminationInputs in;
  in.min_clearance = 0.5;
  in.centerline_length = 500;
  CHECK(check_termination(in, c) == DoneReason::collision);
  in.min_clearance = 5.0;
  in.step_index = 100;
  CHECK(check_termination(in, c) == DoneReason::horizon);
  in.step_index = 3;
  in.s_star = 0.99 * 500;
  CHECK(check_termination(in, c) == DoneReason::goal_reached);
  in.s_star = 10;
  in.consecutive_invalid = 25;
  CHECK(check_termination(in, c) == DoneReason::target_lost);
  in.consecutive_invalid = 0;
  in.success_event = true;
  CHECK(check_termination(in, c) == DoneReason::none);
  c.success_terminates = true;
  CHECK(check_termination(in, c) == DoneReason::success);
  in.min_clearance = 0.0;
  CHECK(check_termination(in, c) == DoneReason::collision);
}

TEST_CASE("ftl body on a straight trace") {
  std::vector<Vec3> trace;
  for (int i = 0; i <= 100; ++i) trace.emplace_back(0, 0, i);
  const auto body = ftl_body(trace, 10.0, 5);
  REQUIRE(body.size() == 5);
  for (int i = 0; i < 5; ++i) CHECK(body[static_cast<std::size_t>(i)].z() == doctest::Approx(90.0 - 10.0 * i));
  const std::vector<Vec3> short_trace = {{0, 0, 0}, {0, 0, 4}};
  for (const Vec3& p : ftl_body(short_trace, 10.0, 3)) CHECK(p == Vec3::Zero());
  CHECK_THROWS_AS(ftl_body({}, 10.0, 3), std::invalid_argument);
}

TEST_CASE("ftl body on a circular arc stays on the arc") {
  const double R = 60.0;
  std::vector<Vec3> trace;
  for (int i = 0; i <= 150; ++i) {
    const double a = i / R;  // 1 mm of arc per step
    trace.emplace_back(R * std::sin(a), 0.0, R - R * std::cos(a));
  }
  const auto body = ftl_body(trace, 10.0, 8);
  const Vec3 center(0, 0, R);
  const double tip_angle = 150.0 / R;
  for (int i = 1; i <= 8; ++i) {
    const Vec3& p = body[static_cast<std::size_t>(i - 1)];
    CHECK(std::abs((p - center).norm() - R) < 0.5);
    // chord interpolation: position along the arc matches i * spacing closely
    const double ang = std::atan2(p.x(), R - p.z());
    CHECK(std::abs((tip_angle - ang) * R - 10.0 * i) < 0.5);
  }
}

TEST_CASE("reset is deterministic and clear of the wall") {
  const auto tube = std::make_shared<const TubeEnvironment>(generate_environment(ProfileTag::simple, 2));
  NavigationEnv env(tube, {}, small_camera(), {});
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Observation a = env.reset(seed);
    const Pose pa = env.state().pose;
    CHECK(tube->wall_distance(pa.position) > env.config().clearance_min);
    const double s0 = tube->nearest_on_centerline(pa.position).distance;
    CHECK(s0 <= 0.2 * tube->centerline().radius_at(0.0) + 1e-9);
    CHECK(pa.forward().dot(tube->centerline().tangent_at(0.0)) >= std::cos(10.0 * M_PI / 180.0) - 1e-9);
    const Observation b = env.reset(seed);
    CHECK(a == b);
    CHECK(env.state().trace.size() == 1);
  }
}

TEST_CASE("unperturbed start in a straight tube observes the center") {
  EpisodeConfig c;
  c.perturb_start = false;
  NavigationEnv env(straight(), c, CameraIntrinsics{}, {});
  const Observation o = env.reset(0);
  CHECK(std::abs(o.dx_norm) < 2.0 / 64);
  CHECK(std::abs(o.dy_norm) < 2.0 / 64);
  CHECK(env.target().valid);
}

TEST_CASE("gating: forward motion only while the target is within the gate ratio") {
  const auto tube = straight(1000.0);
  EpisodeConfig c;
  c.perturb_start = false;
  c.extraction.region = LevelRegion::band;
  c.extraction.level = 20;
  NavigationEnv env(tube, c, small_camera(48), {});
  bool saw_open = false, saw_closed = false;
  for (double tilt = 0.0; tilt <= 45.0; tilt += 2.5) {
    const double t = tilt * M_PI / 180.0;
    env.reset_to(look_along({0, 0, 50}, Vec3(std::sin(t), 0, std::cos(t))), 1);
    const double rho = env.rho();
    const bool valid = env.target().valid;
    const StepOutcome out = env.step({0.0, 0.0, 1.0});
    CHECK(out.info.gate_rho == rho);
    if (valid && rho < 0.35) {
      CHECK(out.info.translation == c.forward_speed);
      saw_open = true;
    } else {
      CHECK(out.info.translation == 0.0);
      saw_closed = true;
    }
  }
  CHECK(saw_open);
  CHECK(saw_closed);
}

TEST_CASE("forward modes") {
  EpisodeConfig c;
  c.perturb_start = false;
  c.gating = false;
  for (auto [mode, a_fw, expected] : {std::tuple{ForwardMode::action, -0.5, 0.0},
                                      std::tuple{ForwardMode::action, 0.5, 0.5},
                                      std::tuple{ForwardMode::constant, -1.0, 1.0},
                                      std::tuple{ForwardMode::bidirectional, -0.5, -0.5}}) {
    c.forward_mode = mode;
    NavigationEnv env(straight(), c, small_camera(), {});
    env.reset_to(look_along({0, 0, 50}, Vec3::UnitZ()), 0);
    const StepOutcome out = env.step({0, 0, a_fw});
    CHECK(out.info.translation == doctest::Approx(expected));
    CHECK(env.state().pose.position.z() == doctest::Approx(50.0 + expected));
    CHECK(env.state().trace_length.back() == doctest::Approx(std::abs(expected)));
  }
}

TEST_CASE("steering rotates by the configured angle per step") {
  EpisodeConfig c;
  c.perturb_start = false;
  NavigationEnv env(straight(), c, small_camera(), {});
  env.reset_to(look_along({0, 0, 50}, Vec3::UnitZ()), 0);
  env.step({1.0, 0.0, 0.0});
  const Vec3 f = env.state().pose.forward();
  CHECK(std::acos(f.z()) * 180.0 / M_PI == doctest::Approx(3.0));
  CHECK(f.x() > 0.0);
  env.reset_to(look_along({0, 0, 50}, Vec3::UnitZ()), 0);
  env.step({0.0, 1.0, 0.0});
  CHECK(env.state().pose.forward().y() > 0.0);  // image-down positive
}

TEST_CASE("all-invalid depth suppresses motion and ends with target_lost after 25 frames") {
  EpisodeConfig c;
  c.perturb_start = false;
  CameraIntrinsics cam = small_camera();
  cam.far_clip = 5.0;  // walls are 20 mm away: nothing valid
  NavigationEnv env(straight(), c, cam, {});
  env.reset(0);
  CHECK_FALSE(env.target().valid);
  int steps = 0;
  StepOutcome out;
  do {
    out = env.step({0, 0, 1});
    ++steps;
    CHECK(out.info.translation == 0.0);
  } while (!out.done);
  CHECK(out.done_reason == DoneReason::target_lost);
  CHECK(steps == 24);  // the reset frame is the first invalid frame
  CHECK_THROWS_AS(env.step({0, 0, 1}), std::logic_error);
}

TEST_CASE("collision ends the episode") {
  EpisodeConfig c;
  c.perturb_start = false;
  c.gating = false;
  c.forward_mode = ForwardMode::constant;
  NavigationEnv env(straight(), c, small_camera(), {});
  env.reset_to(look_along({0, 0, 50}, Vec3(1, 0, 1)), 0);
  StepOutcome out;
  do out = env.step({0, 0, 1});
  while (!out.done);
  CHECK(out.done_reason == DoneReason::collision);
  CHECK(out.info.clearance < c.clearance_min);
}

TEST_CASE("reward uses the offsets observed before the step; breakdown sums exactly") {
  const auto tube = std::make_shared<const TubeEnvironment>(generate_environment(ProfileTag::simple, 4));
  NavigationEnv env(tube, {}, small_camera(), DegradationProfile{0.2, 0.6, 0.05, 2.0, 3.0});
  env.reset(7);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 200 && !env.done(); ++i) {
    const double pu = env.offset_u(), pv = env.offset_v();
    const StepOutcome out = env.step({u(rng), u(rng), u(rng)});
    CHECK(out.reward.u == pu);
    CHECK(out.reward.v == pv);
    const RewardBreakdown& r = out.reward;
    CHECK(r.total == r.r_dis + r.r_dir + r.r_succ + r.r_step + r.r_penalty);
    CHECK(out.done == (out.done_reason != DoneReason::none));
  }
}

TEST_CASE("episodes are deterministic given seed and actions") {
  const auto tube = std::make_shared<const TubeEnvironment>(generate_environment(ProfileTag::complex, 4));
  EpisodeConfig c;
  c.horizon = 150;
  DegradationProfile p{0.2, 0.6, 0.05, 2.0, 3.0};
  NavigationEnv e1(tube, c, small_camera(), p), e2(tube, c, small_camera(), p);
  const TrajectoryLog a = run_episode(e1, make_target_follower(), 11);
  const TrajectoryLog b = run_episode(e2, make_target_follower(), 11);
  REQUIRE(a.steps.size() == b.steps.size());
  for (std::size_t i = 0; i < a.steps.size(); ++i) {
    CHECK(a.steps[i].tip_position == b.steps[i].tip_position);
    CHECK(a.steps[i].reward.total == b.steps[i].reward.total);
  }
}

TEST_CASE("follow-the-leader body stays on the tip trace over an episode") {
  const auto tube = std::make_shared<const TubeEnvironment>(generate_environment(ProfileTag::complex, 5));
  EpisodeConfig c;
  c.horizon = 400;
  NavigationEnv env(tube, c, small_camera(), DegradationProfile{0.2, 0.6, 0.05, 2.0, 3.0});
  env.reset(3);
  const Controller ctl = make_target_follower();
  while (!env.done()) {
    const double gate_rho = env.rho();
    const bool valid = env.target().valid;
    const StepOutcome out = env.step(ctl(env));
    if (!valid || gate_rho >= c.gate_ratio) CHECK(out.info.translation == 0.0);
    for (const Vec3& p : env.body()) CHECK(distance_to_polyline(p, env.state().trace) <= 0.5);
    for (std::size_t i = 1; i < env.state().trace_length.size(); ++i) {
      CHECK(env.state().trace_length[i] >= env.state().trace_length[i - 1]);
    }
  }
}

TEST_CASE("oracle stays on the axis of a straight tube") {
  const auto tube = straight(400.0);
  const TrajectoryLog log = scripted_oracle(tube, {}, small_camera(), {});
  CHECK(log.steps.back().done_reason == DoneReason::goal_reached);
  for (const StepRecord& r : log.steps) CHECK(tube->nearest_on_centerline(r.tip_position).distance < 1.0);
  const TrajectoryLog again = scripted_oracle(tube, {}, small_camera(), {});
  CHECK(again.steps.size() == log.steps.size());
  CHECK(again.steps.back().tip_position == log.steps.back().tip_position);
}

TEST_CASE("lumen follower on a straight tube behaves like the oracle") {
  const auto tube = straight(400.0);
  EpisodeConfig c;
  c.perturb_start = false;
  const TrajectoryLog log = scripted_lumen_follower(tube, c, small_camera(48), {});
  CHECK(log.steps.back().done_reason == DoneReason::goal_reached);
  for (const StepRecord& r : log.steps) CHECK(tube->nearest_on_centerline(r.tip_position).distance < 1.0);
}

TEST_CASE("level-8 target keeps off the wall where the deepest point does not") {
  // complex tube with sharp bends, calibrated-quality noise on a small camera
  const auto tube = std::make_shared<const TubeEnvironment>(generate_environment(ProfileTag::complex, 5002));
  EpisodeConfig c;
  c.forward_mode = ForwardMode::constant;
  c.horizon = 2500;
  const DegradationProfile p{0.2125, 0.6, 0.045, 2.44, 3.0};
  const MetricsReport lumen = evaluate(scripted_lumen_follower(tube, c, small_camera(), p, 9), *tube);
  const MetricsReport level8 = evaluate(scripted_target_follower(tube, c, small_camera(), p, 9), *tube);
  CHECK(lumen.near_wall_steps > level8.near_wall_steps);
}

}  // TEST_SUITE
