#include "wkam/superdiff.hpp"
#include "wkam/weakkam.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace wkam;

namespace {
constexpr double pi = std::numbers::pi;

ScalarField pendulum_exact(int n) {
  return ScalarField::sample(TorusGeometry(1, n), [](const Vec& x) { return 2 / pi * (1 - std::abs(std::cos(pi * x[0]))); });
}
}  // namespace

TEST_SUITE("superdiff") {
  TEST_CASE("pendulum closed form: singular at 1/2, critical at 0 and 1/2") {
    auto s = make_system("pendulum");
    SuperdiffAnalysis sd(pendulum_exact(256), s);
    const auto& g = sd.field().geometry();
    for (std::size_t k = 0; k < g.size(); ++k) {
      const double x = g.node(k)[0];
      if (sd.singular(k)) CHECK(std::abs(x - 0.5) <= 2 * g.h());
    }
    CHECK(sd.singular(g.nearest(Vec(0.5, 0))));
    auto crit = sd.critical_points();
    REQUIRE(crit.size() == 2);
    for (const auto& p : crit) CHECK(std::min(g.distance(p, Vec(0, 0)), g.distance(p, Vec(0.5, 0))) <= g.h());
  }

  TEST_CASE("superdifferential at the kink spans both one-sided slopes") {
    auto s = make_system("pendulum");
    auto set = superdifferential(pendulum_exact(256), s, Vec(0.5, 0));
    CHECK(set.diameter() == doctest::Approx(4.0).epsilon(0.02));
    CHECK(set.contains(Vec(0, 0), 1e-9));
    CHECK(set.minimize_quadratic(Mat::Identity()).norm() < 1e-9);
  }

  TEST_CASE("smooth function has no singular nodes and singleton sets") {
    auto s = make_system("pendulum");
    auto u = ScalarField::sample(TorusGeometry(1, 128), [](const Vec& x) { return 0.1 * std::sin(2 * pi * x[0]); });
    SuperdiffAnalysis sd(u, s);
    CHECK(sd.singular_count() == 0);
    for (std::size_t k = 0; k < u.size(); ++k) CHECK(sd.node_set(k).diameter() <= sd.sing_tol_at(k));
  }

  TEST_CASE("local thresholds never exceed the global one") {
    auto s = make_system("pendulum");
    SuperdiffAnalysis sd(pendulum_exact(128), s);
    SuperdiffOptions global;
    global.local_window = 0;
    SuperdiffAnalysis sg(pendulum_exact(128), s, global);
    for (std::size_t k = 0; k < sd.field().size(); ++k) CHECK(sd.sing_tol_at(k) <= sg.sing_tol() + 1e-15);
    CHECK(sd.sing_tol() == doctest::Approx(sg.sing_tol()));
  }

  TEST_CASE("2D pendulum singular set is one bounded component around a critical point") {
    auto s = make_system("pendulum2d");
    auto r = weak_kam_solution(s, 64);
    REQUIRE(r.converged);
    SuperdiffAnalysis sd(r.u, s);
    for (const auto& comp : sd.singular_components())
      if (!comp.meets_window_boundary) CHECK(comp.contains_critical);
    CHECK_FALSE(sd.critical_points().empty());
  }

  TEST_CASE("convex hull drops interior and collinear points") {
    auto h = convex_hull({Vec(0, 0), Vec(1, 0), Vec(0.5, 0), Vec(1, 1), Vec(0, 1), Vec(0.5, 0.5)});
    CHECK(h.size() == 4);
    ConvexCovectorSet set{Vec::Zero(), h, 2};
    CHECK(set.contains(Vec(0.5, 0.5), 0));
    CHECK_FALSE(set.contains(Vec(1.5, 0.5), 1e-9));
    CHECK(set.distance_to(Vec(2, 0.5)) == doctest::Approx(1.0));
  }

  TEST_CASE("components wrap when they cross the torus") {
    TorusGeometry g(2, 16);
    std::vector<char> mask(g.size(), 0);
    for (int i = 0; i < 16; ++i) mask[g.index(i, 3)] = 1;
    mask[g.index(8, 10)] = 1;
    auto comps = connected_components(g, mask, false);
    REQUIRE(comps.size() == 2);
    int wrapping = 0;
    for (const auto& c : comps) wrapping += c.wraps;
    CHECK(wrapping == 1);
  }
}
