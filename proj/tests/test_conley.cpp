#include "wkam/conley.hpp"
#include "wkam/weakkam.hpp"

#include <doctest.h>

#include <algorithm>

using namespace wkam;

namespace {
struct Solved {
  SystemSpec spec;
  WeakKamResult wk;
  SuperdiffAnalysis sd;
  Semiflow flow;
  Solved(SystemSpec s, int grid)
      : spec(std::move(s)), wk(weak_kam_solution(spec, grid)), sd(wk.u, spec), flow(sd, wk.alpha) {}
};
}  // namespace

TEST_SUITE("conley") {
  TEST_CASE("pendulum chain recurrent set is the critical set") {
    Solved sv(make_system("pendulum"), 256);
    REQUIRE(sv.wk.converged);
    ChainOptions o;
    SampledFlowMap phi(sv.flow, o);
    auto g = build_chain_graph(phi, o);
    auto cr = chain_recurrent_set(g);
    auto crit = cells_containing(g, sv.sd.critical_points());
    CHECK_FALSE(cr.empty());
    CHECK(cell_hausdorff(g, cr, crit) <= 1.0);
  }

  TEST_CASE("free particle has no chain recurrent cells on the lift") {
    Solved sv(make_system("free", {}, Vec(1, 0)), 128);
    auto g = build_chain_graph(sv.flow);
    CHECK(chain_recurrent_set(g).empty());
  }

  TEST_CASE("chain recurrence on a hand-made graph") {
    ChainGraph g;
    g.dim = 1;
    g.periods = 1;
    g.cells_per_period = 5;
    g.edges = {{0, 1, 0}, {1, 2, 0}, {2, 1, 0}, {3, 3, 0}, {3, 4, 0}};
    auto cr = chain_recurrent_set(g);
    std::sort(cr.begin(), cr.end());
    CHECK(cr == std::vector<std::size_t>{1, 2, 3});
  }

  TEST_CASE("cell Hausdorff distance conventions") {
    ChainGraph g;
    g.dim = 2;
    g.periods = 1;
    g.cells_per_period = 4;
    CHECK(cell_hausdorff(g, {}, {}) == 0.0);
    CHECK(std::isinf(cell_hausdorff(g, {0}, {})));
    CHECK(cell_hausdorff(g, {g.cell_index(0, 0)}, {g.cell_index(2, 3)}) == 3.0);
  }

  TEST_CASE("critical values of the pendulum solution") {
    Solved sv(make_system("pendulum"), 256);
    auto hist = critical_values_histogram(sv.sd, 1e-3);
    REQUIRE(hist.size() == 2);
    CHECK(hist.front().value == doctest::Approx(0.0).epsilon(1e-3));
  }
}
