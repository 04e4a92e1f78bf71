#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "lumennav/geometry.hpp"

using namespace lumennav;

namespace {

// Dense scan over n uniformly spaced arclengths, independent of the
// coarse-to-fine search in CenterlineSpline::nearest.
double brute_force_s(const CenterlineSpline& c, const Vec3& p, int n = 100000) {
  double best = 0.0, best_d = 1e300;
  for (int i = 0; i <= n; ++i) {
    const double s = c.length() * i / n;
    const double d = (c.point_at(s) - p).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = s;
    }
  }
  return best;
}

Vec3 random_interior_point(const CenterlineSpline& c, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double s = c.length() * (0.02 + 0.96 * u(rng));
  const Vec3 t = c.tangent_at(s);
  Vec3 n = t.unitOrthogonal();
  const Vec3 b = t.cross(n);
  const double ang = 2.0 * M_PI * u(rng);
  const double r = 0.8 * c.radius_at(s) * std::sqrt(u(rng));
  return c.point_at(s) + r * (std::cos(ang) * n + std::sin(ang) * b);
}

// Sharp bends: curved runs (gaps under 20 mm merged) whose peak curvature
// radius is at most 2.5x the local lumen radius.
int count_sharp_bends(const CenterlineSpline& c, double threshold) {
  int sharp = 0;
  double last_curved = -1e300;
  bool is_sharp = false;
  for (double s = 0.0; s <= c.length(); s += 1.0) {
    const double k = c.curvature_at(s);
    if (k <= threshold) continue;
    if (s - last_curved > 20.0) {
      sharp += is_sharp;
      is_sharp = false;
    }
    last_curved = s;
    if (1.0 / k <= 2.5 * c.radius_at(s)) is_sharp = true;
  }
  return sharp + is_sharp;
}

constexpr double kBendCurvature = 1.0 / 250.0;

}  // namespace

TEST_SUITE("geometry") {

TEST_CASE("spline rejects degenerate input") {
  std::vector<Vec3> pts = {{0, 0, 0}, {0, 0, 10}, {0, 0, 20}};
  CHECK_THROWS_AS(build_centerline(pts, {10, 10, 10}), std::invalid_argument);
  pts.push_back({0, 0, 30});
  CHECK_THROWS_AS(build_centerline(pts, {10, 10, 0, 10}), std::invalid_argument);
  CHECK_THROWS_AS(build_centerline(pts, {10, 10, 10}), std::invalid_argument);
  CHECK_NOTHROW(build_centerline(pts, {10, 10, 10, 10}));
}

TEST_CASE("spline interpolates control points and has increasing arclength") {
  const TubeEnvironment env = generate_environment(ProfileTag::complex, 3);
  const auto& c = env.centerline();
  const auto pts = c.control_points();
  double prev = -1.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double s = c.control_arclength(i);
    CHECK(s > prev);
    prev = s;
    CHECK((c.point_at(s) - pts[i]).norm() < 1e-6);
  }
  CHECK(c.control_arclength(pts.size() - 1) == doctest::Approx(c.length()));
}

TEST_CASE("spline is C1: tangent is continuous across control points") {
  const TubeEnvironment env = generate_environment(ProfileTag::complex, 11);
  const auto& c = env.centerline();
  for (std::size_t i = 1; i + 1 < c.control_points().size(); ++i) {
    const double s = c.control_arclength(i);
    const Vec3 before = c.tangent_at(s - 1e-7);
    const Vec3 after = c.tangent_at(s + 1e-7);
    CHECK((before - after).norm() < 1e-4);
    CHECK(c.tangent_at(s).norm() == doctest::Approx(1.0));
  }
}

TEST_CASE("arclength parameterisation round-trips through nearest") {
  const TubeEnvironment env = generate_environment(ProfileTag::simple, 5);
  const auto& c = env.centerline();
  for (double s = 0.0; s <= c.length(); s += c.length() / 97.0) {
    CHECK(std::abs(c.nearest(c.point_at(s)).s_star - s) < 0.1);
  }
  // unit speed
  const double h = 1e-3;
  for (double s = 5.0; s < c.length() - 5.0; s += 37.0) {
    CHECK((c.point_at(s + h) - c.point_at(s - h)).norm() / (2 * h) == doctest::Approx(1.0).epsilon(1e-3));
  }
}

TEST_CASE("out-of-range arclength is rejected") {
  const TubeEnvironment env = make_straight_tube(100, 20);
  CHECK_THROWS_AS(env.centerline().point_at(-1.0), std::out_of_range);
  CHECK_THROWS_AS(env.centerline().point_at(101.0), std::out_of_range);
}

TEST_CASE("nearest point on a straight tube") {
  const TubeEnvironment env = make_straight_tube(200, 20);
  const auto r0 = env.nearest_on_centerline({0, 0, 80});
  CHECK(r0.distance < 1e-6);
  CHECK(r0.s_star == doctest::Approx(80.0));
  const auto r = env.nearest_on_centerline({5, 0, 50});
  CHECK(r.s_star == doctest::Approx(50.0).epsilon(1e-6));
  CHECK(r.distance == doctest::Approx(5.0).epsilon(1e-9));
  CHECK(r.radius_at == doctest::Approx(20.0));
}

TEST_CASE("nearest point clamps to the ends") {
  const TubeEnvironment env = make_straight_tube(100, 20);
  const auto before = env.nearest_on_centerline({0, 3, -10});
  CHECK(before.s_star == doctest::Approx(0.0));
  CHECK(before.distance == doctest::Approx(std::hypot(3.0, 10.0)));
  const auto after = env.nearest_on_centerline({0, 0, 130});
  CHECK(after.s_star == doctest::Approx(100.0));
}

TEST_CASE("wall distance examples") {
  const TubeEnvironment env = make_straight_tube(200, 20);
  CHECK(env.wall_distance({0, 0, 100}) == doctest::Approx(20.0));
  CHECK(env.wall_distance({20, 0, 100}) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(env.wall_distance({10, 0, 100}) == doctest::Approx(10.0));
  CHECK(env.wall_distance({0, -25, 100}) < 0.0);
}

TEST_CASE("nearest agrees with a dense brute-force scan") {
  for (auto [tag, seed] : {std::pair{ProfileTag::simple, 21ull}, std::pair{ProfileTag::complex, 22ull}}) {
    const TubeEnvironment env = generate_environment(tag, seed);
    const auto& c = env.centerline();
    std::mt19937_64 rng(seed);
    double worst = 0.0;
    for (int q = 0; q < 1000; ++q) {
      const Vec3 p = random_interior_point(c, rng);
      const auto r = c.nearest(p);
      const double s_bf = brute_force_s(c, p, q < 50 ? 100000 : 20000);
      // compare distances, robust to flat minima where s* is ambiguous
      const double d_bf = (c.point_at(s_bf) - p).norm();
      worst = std::max(worst, r.distance - d_bf);
      if (std::abs(r.s_star - s_bf) >= 0.1) CHECK(std::abs(r.distance - d_bf) < 1e-3);
      CHECK(r.distance == doctest::Approx((r.point - p).norm()).epsilon(1e-12));
      CHECK(r.s_star >= 0.0);
      CHECK(r.s_star <= c.length());
      // radius identity holds exactly
      CHECK(env.wall_distance(p) == r.radius_at - r.distance);
    }
    CHECK(worst < 1e-3);
  }
}

TEST_CASE("generation is a pure function of profile and seed") {
  const TubeEnvironment a = generate_environment(ProfileTag::simple, 42);
  const TubeEnvironment b = generate_environment(ProfileTag::simple, 42);
  REQUIRE(a.centerline().control_points().size() == b.centerline().control_points().size());
  for (std::size_t i = 0; i < a.centerline().control_points().size(); ++i) {
    CHECK(a.centerline().control_points()[i] == b.centerline().control_points()[i]);
    CHECK(a.centerline().radii()[i] == b.centerline().radii()[i]);
  }
  CHECK(a.texture_seed() == b.texture_seed());
  const TubeEnvironment c = generate_environment(ProfileTag::simple, 43);
  CHECK(c.centerline().length() != a.centerline().length());
  CHECK_THROWS_AS(generate_environment(ProfileTag::custom, 1), std::invalid_argument);
}

TEST_CASE("generated profiles satisfy their shape constraints") {
  for (std::uint64_t seed = 0; seed < 12; ++seed) {
    for (ProfileTag tag : {ProfileTag::simple, ProfileTag::complex}) {
      CAPTURE(seed);
      CAPTURE(to_string(tag));
      const TubeEnvironment env = generate_environment(tag, seed);
      const auto& c = env.centerline();
      CHECK(env.profile() == tag);
      CHECK(c.length() >= 600.0);
      CHECK(c.length() <= 1200.0);
      CHECK(c.min_radius() >= 15.0);
      CHECK(c.max_radius() <= 25.0);
      CHECK(c.min_radius() > 2.0 * kTipRadius);
      const int bends = count_bends(c, kBendCurvature);
      if (tag == ProfileTag::simple) {
        CHECK(bends >= 3);
        CHECK(bends <= 5);
        // gentle: curvature radius at least 4x lumen radius everywhere
        for (double s = 0.0; s <= c.length(); s += 1.0) {
          const double k = c.curvature_at(s);
          if (k > 0.0) CHECK(1.0 / k >= 4.0 * c.radius_at(s));
        }
      } else {
        CHECK(bends >= 6);
        CHECK(bends <= 10);
        CHECK(count_sharp_bends(c, kBendCurvature) >= 2);
      }
    }
  }
}

TEST_CASE("profile tags round-trip") {
  for (ProfileTag t : {ProfileTag::simple, ProfileTag::complex, ProfileTag::custom}) {
    CHECK(profile_from_string(to_string(t)) == t);
  }
  CHECK_THROWS_AS(profile_from_string("medium"), std::invalid_argument);
}

TEST_CASE("environment modifiers validate their ranges") {
  const TubeEnvironment env = make_straight_tube(100, 20);
  CHECK(env.with_texture_amplitude(0.08).texture_amplitude() == 0.08);
  CHECK_THROWS_AS(env.with_texture_amplitude(0.2), std::invalid_argument);
  CHECK(env.with_far_clip(150).far_clip() == 150.0);
  CHECK_THROWS_AS(env.with_far_clip(0.0), std::invalid_argument);
}

TEST_CASE("polyline projection matches spline nearest inside the lumen") {
  const TubeEnvironment env = generate_environment(ProfileTag::complex, 8);
  std::mt19937_64 rng(8);
  for (int q = 0; q < 200; ++q) {
    const Vec3 p = random_interior_point(env.centerline(), rng);
    const auto exact = env.nearest_on_centerline(p);
    std::size_t hint = env.polyline().segment_at(exact.s_star);
    const auto proj = env.polyline().project_local(p, hint);
    CHECK(std::abs(proj.distance - exact.distance) < 0.05);
  }
}

}  // TEST_SUITE
