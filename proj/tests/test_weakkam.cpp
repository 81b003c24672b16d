#include "wkam/weakkam.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace wkam;

namespace {
constexpr double pi = std::numbers::pi;
}

TEST_SUITE("weakkam") {
  TEST_CASE("pendulum alpha at zero and above the threshold") {
    auto s = make_system("pendulum");
    CHECK(std::abs(compute_alpha(s, Vec(0, 0), 256)) < 1e-3);
    CHECK(std::abs(compute_alpha(s, Vec(1.5, 0), 256) - 0.2446376406) < 2e-3);
    CHECK(std::abs(compute_alpha(s, Vec(-2.0, 0), 256) - 1.0637954229) < 2e-3);
  }

  TEST_CASE("free particle alpha is |c|^2/2") {
    auto s = make_system("free");
    CHECK(compute_alpha(s, Vec(1, 0), 128) == doctest::Approx(0.5).epsilon(2e-3));
    auto s2 = make_system("free", {2});
    CHECK(compute_alpha(s2, Vec(0.5, 0.5), 32) == doctest::Approx(0.25).epsilon(5e-3));
  }

  TEST_CASE("pendulum solution matches the closed form") {
    auto s = make_system("pendulum");
    auto r = weak_kam_solution(s, 256);
    REQUIRE(r.converged);
    CHECK(r.u.min() == doctest::Approx(0.0));
    auto exact = ScalarField::sample(r.u.geometry(), [](const Vec& x) { return 2 / pi * (1 - std::abs(std::cos(pi * x[0]))); });
    CHECK(r.u.sup_distance(exact) < 2e-2);
  }

  TEST_CASE("solution is a fixed point of the Lax-Oleinik semigroup up to alpha") {
    auto s = make_system("pendulum");
    auto r = weak_kam_solution(s, 256);
    REQUIRE(r.converged);
    const double t = 0.5 * t0_estimate(s);
    auto w = lax_oleinik_minus(s, r.u, t, r.alpha);
    CHECK(w.sup_distance(r.u) < 1e-3);
  }

  TEST_CASE("semigroup properties: monotone and commutes with constants") {
    auto s = make_system("pendulum");
    TorusGeometry g(1, 128);
    LaxOleinik lo(s, g);
    auto u = ScalarField::sample(g, [](const Vec& x) { return std::sin(2 * pi * x[0]); });
    auto v = ScalarField::sample(g, [](const Vec& x) { return std::sin(2 * pi * x[0]) + 0.1 + 0.05 * std::cos(6 * pi * x[0]); });
    const Vec c(0.3, 0);
    auto tu = lo.minus(u, c, 0.0), tv = lo.minus(v, c, 0.0), tu1 = lo.minus(u.shifted(0.7), c, 0.0);
    for (std::size_t k = 0; k < g.size(); ++k) {
      CHECK(tu[k] <= tv[k] + 1e-12);
      CHECK(tu1[k] == doctest::Approx(tu[k] + 0.7).epsilon(1e-12));
    }
  }

  TEST_CASE("alpha bracket contains the value") {
    auto s = make_system("pendulum");
    TorusGeometry g(1, 128);
    LaxOleinik lo(s, g);
    auto r = compute_alpha(lo, Vec(1.5, 0));
    REQUIRE(r.converged);
    CHECK(r.lower <= r.alpha);
    CHECK(r.alpha <= r.upper);
    CHECK(r.upper - r.lower <= 1e-4);
  }

  TEST_CASE("rejects bad relaxation") {
    auto s = make_system("pendulum");
    TorusGeometry g(1, 64);
    LaxOleinik lo(s, g);
    AlphaOptions o;
    o.relaxation = 0.0;
    CHECK_THROWS_AS(compute_alpha(lo, Vec(0, 0), o), ConfigError);
    WeakKamOptions w;
    w.relaxation = 1.5;
    CHECK_THROWS_AS(weak_kam_solution(lo, Vec(0, 0), w), ConfigError);
  }
}
