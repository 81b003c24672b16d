#include "wkam/action.hpp"
#include "wkam/system.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace wkam;

TEST_SUITE("system") {
  TEST_CASE("registry builds every named system") {
    for (const auto& name : registered_systems()) {
      auto s = make_system(name);
      CHECK(s.name() == name);
      CHECK((s.dim() == 1 || s.dim() == 2));
    }
    CHECK_THROWS_AS(make_system("nope"), ConfigError);
    CHECK_THROWS_AS(make_system("free", {3}), ConfigError);
  }

  TEST_CASE("potential is shifted to max 0") {
    auto s = make_system("pendulum");
    CHECK(s.V(Vec(0, 0)) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(s.V(Vec(0.5, 0)) == doctest::Approx(-2.0).epsilon(1e-12));
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0, 1);
    for (int i = 0; i < 200; ++i) CHECK(s.V(Vec(u(rng), 0)) <= 1e-12);
  }

  TEST_CASE("kinetic matrix inverts A and is positive") {
    auto s = make_system("bump_metric");
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0, 1);
    for (int i = 0; i < 100; ++i) {
      Vec x(u(rng), u(rng));
      Mat prod = s.metric(x) * s.A(x);
      CHECK((prod - Mat::Identity()).norm() < 1e-12);
      CHECK(s.A(x).determinant() > 0);
    }
  }

  TEST_CASE("t0 follows the growth constants") {
    for (const auto& name : registered_systems()) {
      auto s = make_system(name);
      const auto& g = s.growth();
      const double expected = g.C1 / (s.kappa1(1.0) + g.C2 + g.C1);
      CHECK(t0_estimate(s) == doctest::Approx(expected).epsilon(1e-12));
      CHECK(t0_estimate(s) > 0);
    }
  }

  TEST_CASE("Hamiltonian and Lagrangian are Legendre dual") {
    auto s = make_system("bump_metric", {}, Vec(0.3, -0.2));
    const Vec x(0.45, 0.55), p(0.7, -1.1);
    const Vec v = s.A(x) * p;
    // H(x, p) + L(x, v) = <p, v> at the Legendre pair, both unshifted
    const auto s0 = s.with_c(Vec::Zero());
    const double H = eval_hamiltonian(s0, x, p, false);
    const double L = eval_lagrangian_c(s0, x, v, 0.0);
    CHECK(H + L == doctest::Approx(p.dot(v)).epsilon(1e-12));
  }
}
