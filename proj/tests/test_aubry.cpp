#include "wkam/aubry.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace wkam;

TEST_SUITE("aubry") {
  TEST_CASE("pendulum barrier values") {
    auto s = make_system("pendulum");
    CHECK(std::abs(peierls_barrier(s, Vec(0, 0), Vec(0, 0), 0.0)) < 1e-3);
    CHECK(std::abs(peierls_barrier(s, Vec(0.5, 0), Vec(0.5, 0), 0.0) - 4 / std::numbers::pi) < 2e-2);
  }

  TEST_CASE("pendulum Aubry set is the hyperbolic point") {
    auto s = make_system("pendulum");
    auto a = aubry_set(s, 0.0);
    REQUIRE_FALSE(a.points.empty());
    TorusGeometry g(1, 512);
    for (const auto& p : a.points) CHECK(g.distance(p, Vec(0, 0)) <= a.cell);
  }

  TEST_CASE("barrier satisfies the triangle inequality") {
    auto s = make_system("pendulum");
    TorusGeometry g(1, 128);
    std::vector<std::size_t> sources;
    for (std::size_t k = 0; k < g.size(); k += 8) sources.push_back(k);
    auto t = barrier_table(s, g, 0.0, sources);
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<std::size_t> pick(0, sources.size() - 1);
    for (int i = 0; i < 100; ++i) {
      const auto a = pick(rng), b = pick(rng), c = pick(rng);
      CHECK(t.between(a, c) <= t.between(a, b) + t.between(b, c) + 1e-9);
    }
    for (std::size_t k = 0; k < sources.size(); ++k) CHECK(t.diagonal(k) >= -1e-9);
  }

  TEST_CASE("distance between point sets on the torus") {
    TorusGeometry g(1, 64);
    CHECK(distance_to_set(g, {Vec(0.95, 0)}, {Vec(0.05, 0), Vec(0.5, 0)}) == doctest::Approx(0.1));
  }
}
