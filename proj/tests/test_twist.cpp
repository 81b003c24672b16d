#include "wkam/twist.hpp"

#include <doctest.h>

#include <cmath>

using namespace wkam;

TEST_SUITE("twist") {
  TEST_CASE("integrable map: rotation numbers are exact") {
    auto h = GeneratingFunction::standard_map(0.0);
    for (auto [p, q] : std::vector<std::pair<long, long>>{{0, 1}, {1, 3}, {2, 5}, {3, 8}}) {
      auto cfg = minimal_periodic_config(h, p, q);
      CHECK(std::abs(rotation_number(cfg) - double(p) / q) <= 1e-12);
      CHECK(cfg.residual <= 1e-8);
    }
  }

  TEST_CASE("minimal configurations are stationary and increasing") {
    auto h = GeneratingFunction::standard_map(0.8);
    auto cfg = minimal_periodic_config(h, 2, 5);
    CHECK(configuration_residual(h, cfg) <= 1e-8);
    for (std::size_t i = 1; i < cfg.x.size(); ++i) CHECK(cfg.x[i] > cfg.x[i - 1]);
  }

  TEST_CASE("generating function jet matches finite differences") {
    auto h = GeneratingFunction::standard_map(1.3);
    const double x = 0.21, y = 0.74, e = 1e-6;
    auto j = h.jet(x, y);
    CHECK(j.d1 == doctest::Approx((h(x + e, y) - h(x - e, y)) / (2 * e)).epsilon(1e-6));
    CHECK(j.d2 == doctest::Approx((h(x, y + e) - h(x, y - e)) / (2 * e)).epsilon(1e-6));
    CHECK(h(x + 1, y + 1) == doctest::Approx(h(x, y)));
  }

  TEST_CASE("convergents of the golden mean are Fibonacci ratios") {
    auto cv = convergents(0.6180339887498949, 100);
    REQUIRE(cv.size() >= 5);
    const auto& [p, q] = cv.back();
    CHECK(p == 55);
    CHECK(q == 89);
  }

  TEST_CASE("flat metric distance function is Euclidean") {
    auto h = distance_generating_function(make_system("free", {2}), 128);
    for (double d : {0.0, 0.3, -0.6}) CHECK(std::abs(h(0.2, 0.2 + d) - std::hypot(1.0, d)) <= 2e-2);
  }

  TEST_CASE("gap widths over one period sum to at most one") {
    auto h = GeneratingFunction::standard_map(1.2);
    const Gap gap = minimal_gap(h, 0.6180339887498949, 0.1);
    CHECK(gap.x <= 0.1);
    CHECK(gap.y > 0.1);
    auto full = gap_sequence(h, 0.6180339887498949, gap.x, gap.y, 55);
    CHECK(full.size() == 55);
    // A sub-interval contracts onto the orbit and the sequence stops once it collapses.
    auto gaps = gap_sequence(h, 0.6180339887498949, gap.x + 0.2 * gap.width(), gap.y, 55);
    REQUIRE_FALSE(gaps.empty());
    CHECK(gaps.back().width() < gaps.front().width());
    double sum = 0;
    for (const auto& g : gaps) {
      CHECK(g.width() > 0);
      sum += g.width();
    }
    CHECK(sum <= 1 + 1e-6);
    CHECK(gap_overlap(gaps, gaps.size()) <= 1e-10);
  }

  TEST_CASE("integrable gaps keep their width") {
    auto h = GeneratingFunction::standard_map(0.0);
    const Gap gap = minimal_gap(h, 0.6180339887498949, 0.3);
    const double x0 = gap.x + 0.25 * gap.width(), y0 = gap.x + 0.75 * gap.width();
    auto gaps = gap_sequence(h, 0.6180339887498949, x0, y0, 110);
    REQUIRE(gaps.size() == 110);
    for (const auto& g : gaps) CHECK(g.width() == doctest::Approx(y0 - x0).epsilon(1e-9));
    CHECK(gap_overlap(gaps, 55) <= 1e-10);
  }

  TEST_CASE("intervals across the orbit are rejected") {
    auto h = GeneratingFunction::standard_map(1.2);
    CHECK_THROWS_AS(gap_sequence(h, 0.6180339887498949, 0.1, 0.6, 10), ConfigError);
  }

  TEST_CASE("overlap of intervals mod one") {
    CHECK(gap_overlap({{0.1, 0.3}, {1.4, 1.5}}, 2) == doctest::Approx(0.0));
    CHECK(gap_overlap({{0.1, 0.3}, {1.2, 1.5}}, 2) == doctest::Approx(0.1));
  }
}
