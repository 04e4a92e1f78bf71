#include <doctest.h>

#include <cmath>
#include <memory>

#include "lumennav/baselines.hpp"
#include "lumennav/metrics.hpp"

using namespace lumennav;

namespace {

TrajectoryLog path_log(const std::vector<Vec3>& pts, double dt = 1.0) {
  TrajectoryLog log;
  log.step_period = dt;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    StepRecord r;
    r.step = static_cast<int>(i + 1);
    r.t = r.step * dt;
    r.tip_position = pts[i];
    r.clearance = 10.0;
    log.steps.push_back(r);
  }
  return log;
}

TrajectoryLog centerline_log(const TubeEnvironment& env, double step = 1.0) {
  std::vector<Vec3> pts;
  for (double s = step; s <= env.centerline().length(); s += step) pts.push_back(env.centerline().point_at(s));
  return path_log(pts);
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("d_geo examples") {
  const TubeEnvironment env = make_straight_tube(200, 20);
  TrajectoryLog log = centerline_log(env);
  CHECK(d_geo(log, env) == 0.0);
  TrajectoryLog one = path_log({{0, 0, 50}});
  one.steps[0].rho = 1.0;
  CHECK(d_geo(one, env) == doctest::Approx(1.0));
  one.steps[0].rho = 0.5;
  one.steps[0].tip_position = {20, 0, 50};
  CHECK(d_geo(one, env) == doctest::Approx(0.75));
  CHECK_THROWS_AS(d_geo(TrajectoryLog{}, env), std::invalid_argument);
}

TEST_CASE("jerk index of polynomial paths") {
  std::vector<Vec3> lin, quad, cubic;
  const double dt = 0.1;
  for (int i = 0; i < 40; ++i) {
    const double t = i * dt;
    lin.emplace_back(2 * t + 1, -t, 0.5 * t);
    quad.emplace_back(3 * t * t - t, 0.5 * t * t, 1.0);
    cubic.emplace_back(t * t * t, 0.0, 0.0);
  }
  CHECK(jerk_index(lin, dt) == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(std::abs(jerk_index(lin, dt)) < 1e-9);
  CHECK(std::abs(jerk_index(quad, dt)) < 1e-6);
  CHECK(std::abs(jerk_index(cubic, dt) - 6.0) < 1e-6);
  CHECK_THROWS_AS(jerk_index(std::vector<Vec3>(3, Vec3::Zero()), dt), std::invalid_argument);
}

TEST_CASE("jerk index scales linearly with position") {
  std::vector<Vec3> a, b;
  for (int i = 0; i < 30; ++i) {
    a.emplace_back(std::sin(0.3 * i), std::cos(0.17 * i), 0.01 * i * i);
    b.push_back(2.5 * a.back());
  }
  CHECK(jerk_index(b, 1.0) == doctest::Approx(2.5 * jerk_index(a, 1.0)).epsilon(1e-12));
  CHECK(jerk_index(a, 1.0) >= 0.0);
}

TEST_CASE("s_nav examples and monotonicity") {
  const TubeEnvironment env = make_straight_tube(300, 20);
  TrajectoryLog log = centerline_log(env);
  CHECK(s_nav(log, env) == doctest::Approx(1.0));
  for (auto& r : log.steps) r.collision = true;
  CHECK(s_nav(log, env) == doctest::Approx(0.4));
  TrajectoryLog partial = centerline_log(env);
  double prev = 2.0;
  for (std::size_t k = 0; k < partial.steps.size(); k += 25) {
    partial.steps[k].collision = true;
    const double s = s_nav(partial, env);
    CHECK(s <= prev);
    prev = s;
  }
  const TrajectoryLog full = centerline_log(env);
  CHECK(s_nav(full, env, PathMode::literal) == doctest::Approx(1.0 - 0.4 * path_length(full) / 300.0));
}

TEST_CASE("excess path counts only the detour") {
  const TubeEnvironment env = make_straight_tube(100, 20);
  std::vector<Vec3> zig;
  for (int i = 1; i <= 100; ++i) zig.emplace_back(i % 2 ? 1.0 : -1.0, 0, i);
  const TrajectoryLog log = path_log(zig);
  const double excess = path_length(log) - 100.0 * completion_fraction(log, env);
  CHECK(excess > 0.0);
  CHECK(s_nav(log, env) == doctest::Approx(1.0 - 0.4 * excess / 100.0));
}

TEST_CASE("path length and completion") {
  const TubeEnvironment env = make_straight_tube(200, 20);
  const TrajectoryLog log = path_log({{0, 0, 0}, {3, 4, 0}, {3, 4, 50}});
  CHECK(path_length(log) == doctest::Approx(55.0));
  CHECK(completion_fraction(log, env) == doctest::Approx(0.25));
}

TEST_CASE("metrics are invariant to a rigid motion of environment and log") {
  const TubeEnvironment env = generate_environment(ProfileTag::complex, 61);
  const Eigen::AngleAxisd rot(0.7, Vec3(1, 2, 3).normalized());
  const Vec3 shift(40, -25, 300);
  std::vector<Vec3> pts;
  for (const Vec3& p : env.centerline().control_points()) pts.push_back(rot * p + shift);
  std::vector<double> radii(env.centerline().radii().begin(), env.centerline().radii().end());
  const TubeEnvironment moved(build_centerline(pts, radii), ProfileTag::custom, 0);

  TrajectoryLog log;
  for (int i = 1; i <= 400; ++i) {
    const double s = 1.5 * i;
    StepRecord r;
    r.step = i;
    r.t = i;
    const Vec3 t = env.centerline().tangent_at(s);
    r.tip_position = env.centerline().point_at(s) + 4.0 * std::sin(0.05 * i) * t.unitOrthogonal();
    r.rho = 0.1 + 0.05 * std::cos(0.1 * i);
    r.collision = i % 97 == 0;
    log.steps.push_back(r);
  }
  TrajectoryLog log2 = log;
  for (auto& r : log2.steps) r.tip_position = rot * r.tip_position + shift;
  const MetricsReport a = evaluate(log, env), b = evaluate(log2, moved);
  CHECK(std::abs(a.d_geo - b.d_geo) < 1e-9);
  CHECK(std::abs(a.s_nav - b.s_nav) < 1e-9);
  CHECK(std::abs(a.jerk_index - b.jerk_index) < 1e-9);
  CHECK(std::abs(a.completion - b.completion) < 1e-9);
  CHECK(a.n_collisions == 4);
  CHECK(a.d_geo >= 0.0);
  CHECK(a.s_nav <= 1.0);
  CHECK(a.completion >= 0.0);
  CHECK(a.completion <= 1.0);
}

TEST_CASE("aggregation") {
  const TubeEnvironment env = make_straight_tube(200, 20);
  const MetricsReport m = evaluate(centerline_log(env), env);
  const std::vector<MetricsReport> same(4, m);
  const AggregateReport a = aggregate(same);
  CHECK(a.episodes == 4);
  CHECK(a.d_geo.std == 0.0);
  CHECK(a.s_nav.std == 0.0);
  CHECK(a.jerk_index.mean == m.jerk_index);
  CHECK(a.collision_free_complete == 4);
  CHECK_THROWS_AS(aggregate(std::vector<MetricsReport>{}), std::invalid_argument);
  MetricsReport m2 = m;
  m2.s_nav = 0.5;
  const std::vector<MetricsReport> two = {m, m2};
  CHECK(aggregate(two).s_nav.mean == doctest::Approx(0.75));
  CHECK(aggregate(two).s_nav.std == doctest::Approx(0.25));
}

TEST_CASE("summary CSV and SVG output") {
  const TubeEnvironment env = make_straight_tube(200, 20);
  const TrajectoryLog log = centerline_log(env);
  const SummaryRow row{"oracle", aggregate(std::vector<MetricsReport>{evaluate(log, env)})};
  const std::string csv = summary_csv(std::span(&row, 1));
  CHECK(csv.rfind("method,episodes,", 0) == 0);
  CHECK(csv.find("\noracle,1,") != std::string::npos);
  const std::vector<TrajectoryLog> logs = {log};
  const std::vector<std::string> labels = {"oracle"};
  const std::string svg = trajectory_svg(env, logs, labels);
  CHECK(svg.find("<svg") != std::string::npos);
  CHECK(svg.find("</svg>") != std::string::npos);
  CHECK(svg.find("oracle") != std::string::npos);
}

TEST_CASE("oracle on simple environments: complete, collision-free, centred") {
  CameraIntrinsics cam;
  cam.width = cam.height = 64;
  for (std::uint64_t seed : {1ull, 2ull}) {
    const auto tube = std::make_shared<const TubeEnvironment>(generate_environment(ProfileTag::simple, seed));
    EpisodeConfig c;
    c.horizon = 2500;
    const TrajectoryLog log = scripted_oracle(tube, c, cam, {});
    const MetricsReport m = evaluate(log, *tube);
    CAPTURE(seed);
    CHECK(m.completion >= 0.98);
    CHECK(m.n_collisions == 0);
    // the level-8 region leans toward the outer wall in bends, so rho stays near 0.2 there
    CHECK(m.d_geo < 0.125);
    CHECK(m.s_nav > 0.95);
  }
}

TEST_CASE("path modes round-trip through strings") {
  CHECK(path_mode_from_string("excess") == PathMode::excess);
  CHECK(path_mode_from_string(to_string(PathMode::literal)) == PathMode::literal);
  CHECK_THROWS_AS(path_mode_from_string("raw"), std::invalid_argument);
}

}  // TEST_SUITE
