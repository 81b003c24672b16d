#include "wkam/semiflow.hpp"
#include "wkam/weakkam.hpp"

#include <doctest.h>

#include <cmath>

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

TEST_SUITE("semiflow") {
  TEST_CASE("pendulum flow follows the characteristic ODE") {
    // On (0, 1/2) the selection is the smooth branch of u, giving dx/dt = 2 sin(pi x);
    // the characteristic then stops at the singular critical point 1/2.
    Solved sv(make_system("pendulum"), 512);
    REQUIRE(sv.wk.converged);
    const Vec x = sv.flow.flow(Vec(0.25, 0), 0.01, 0.001, FlowMethod::intrinsic);
    CHECK(std::abs(x[0] - 0.2644560827) < 2e-4);
    const Vec far = sv.flow.flow(Vec(0.25, 0), 10.0, 0.01, FlowMethod::selection_ode);
    CHECK(std::abs(far[0] - 0.5) < 5e-3);
  }

  TEST_CASE("free particle moves with velocity c") {
    Solved sv(make_system("free", {}, Vec(1, 0)), 256);
    const double tau = 0.01;
    for (double x0 : {0.1, 0.37, 0.8}) {
      const Vec y = sv.flow.step_intrinsic(Vec(x0, 0), tau);
      CHECK(y[0] == doctest::Approx(x0 + tau).epsilon(1e-3));
      CHECK(sv.flow.step_selection_ode(Vec(x0, 0), tau)[0] == doctest::Approx(x0 + tau).epsilon(1e-3));
    }
  }

  TEST_CASE("v does not decrease along trajectories") {
    Solved sv(make_system("pendulum"), 256);
    for (auto m : {FlowMethod::intrinsic, FlowMethod::selection_ode}) {
      auto tr = sv.flow.integrate(Vec(0.4, 0), 2.0, 0.01, m);
      for (std::size_t i = 1; i < tr.size(); ++i) CHECK(tr.v_values[i] >= tr.v_values[i - 1] - 1e-3);
    }
  }

  TEST_CASE("omega limits") {
    Solved pend(make_system("pendulum"), 256);
    auto tr = pend.flow.integrate(Vec(0.3, 0), 10.0, 0.01, FlowMethod::intrinsic);
    CHECK(omega_limit(tr, pend.sd.field().geometry(), 0.5, pend.flow.cluster_tol()).kind == OmegaKind::stationary);

    Solved closed(make_system("free", {2}, Vec(1, 0)), 32);
    auto tc = closed.flow.integrate(Vec(0.2, 0.3), 14.0, 0.02, FlowMethod::selection_ode);
    auto oc = omega_limit(tc, closed.sd.field().geometry(), 0.5, closed.flow.cluster_tol());
    CHECK(oc.kind == OmegaKind::closed);
    REQUIRE(oc.period_estimate);
    CHECK(std::abs(*oc.period_estimate - 1.0) <= 0.02 + 1e-9);

    Solved irr(make_system("free", {2}, Vec(1, std::sqrt(2.0))), 32);
    auto ti = irr.flow.integrate(Vec(0.2, 0.3), 20.0, 0.02, FlowMethod::selection_ode);
    CHECK(omega_limit(ti, irr.sd.field().geometry(), 0.5, irr.flow.cluster_tol()).kind ==
          OmegaKind::recurrent_unbounded_return);
  }

  TEST_CASE("method names round-trip") {
    for (auto m : {FlowMethod::intrinsic, FlowMethod::selection_ode}) CHECK(parse_flow_method(to_string(m)) == m);
    CHECK_THROWS_AS(parse_flow_method("euler"), ConfigError);
  }
}
