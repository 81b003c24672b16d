#include "wkam/action.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace wkam;

TEST_SUITE("action") {
  TEST_CASE("free particle action is quadratic") {
    auto s = make_system("free");
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-1, 1);
    const double t0 = t0_estimate(s);
    for (int i = 0; i < 25; ++i) {
      const double x = u(rng), y = x + u(rng), t = t0 * (0.1 + 0.45 * (u(rng) + 1));
      auto m = fundamental_solution(s, Vec(x, 0), Vec(y, 0), t, 0.0);
      CHECK(m.converged);
      CHECK(m.action == doctest::Approx((y - x) * (y - x) / (2 * t)).epsilon(1e-9));
    }
  }

  TEST_CASE("free 2D action with cohomology and alpha shifts") {
    auto s = make_system("free", {2}, Vec(0.5, -1.0));
    const Vec x(0.1, 0.2), y(0.4, -0.1);
    const double t = 0.2, alpha = 0.3;
    auto m = fundamental_solution(s, x, y, t, alpha);
    const Vec d = y - x;
    CHECK(m.action == doctest::Approx(d.squaredNorm() / (2 * t) - s.c().dot(d) + alpha * t).epsilon(1e-9));
  }

  TEST_CASE("end momentum matches the finite difference of the action") {
    auto s = make_system("pendulum");
    auto e = dy_fundamental_solution(s, Vec(0.1, 0), Vec(0.17, 0), 0.1, 0.0);
    CHECK_FALSE(e.ambiguous);
    CHECK(std::abs(e.momentum[0] - e.finite_difference[0]) < 1e-5);
  }

  TEST_CASE("action is symmetric for reversible systems") {
    auto s = make_system("pendulum2d");
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> u(0, 1);
    for (int i = 0; i < 10; ++i) {
      const Vec x(u(rng), u(rng)), y = x + 0.05 * Vec(u(rng) - 0.5, u(rng) - 0.5);
      const double a = fundamental_solution(s, x, y, 0.05, 0.0).action;
      const double b = fundamental_solution(s, y, x, 0.05, 0.0).action;
      CHECK(a == doctest::Approx(b).epsilon(1e-8));
    }
  }

  TEST_CASE("torus action takes the nearest lattice translate") {
    auto s = make_system("free");
    auto r = torus_fundamental_solution(s, Vec(0.95, 0), Vec(0.05, 0), 0.1, 0.0);
    CHECK(r.curve.action == doctest::Approx(0.01 / 0.2).epsilon(1e-9));
  }

  TEST_CASE("rejects bad input") {
    auto s = make_system("free");
    CHECK_THROWS_AS(fundamental_solution(s, Vec(NAN, 0), Vec(0, 0), 0.1, 0.0), ConfigError);
    CHECK_THROWS_AS(fundamental_solution(s, Vec(0, 0), Vec(0, 0), -1.0, 0.0), ConfigError);
  }
}
