#include "wkam/acceptance.hpp"

#include "wkam/action.hpp"
#include "wkam/aubry.hpp"
#include "wkam/conley.hpp"
#include "wkam/semiflow.hpp"
#include "wkam/superdiff.hpp"
#include "wkam/twist.hpp"
#include "wkam/weakkam.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <memory>
#include <numbers>
#include <random>

namespace wkam {
namespace {

constexpr double pi = std::numbers::pi;
constexpr double golden = 0.6180339887498949;

struct Solved {
  SystemSpec spec;
  WeakKamResult wk;
  std::unique_ptr<SuperdiffAnalysis> sd;
  std::unique_ptr<Semiflow> flow;
};

Solved solve(const std::string& name, const std::vector<double>& params, Vec c, int grid) {
  auto spec = make_system(name, params, c);
  TorusGeometry g(spec.dim(), grid);
  LaxOleinik lo(spec, g);
  auto wk = weak_kam_solution(lo, c);
  if (!wk.converged)
    throw ConvergenceError(fmt::format("{} weak KAM solve stalled at residual {:.3g}", name, wk.residual));
  auto sd = std::make_unique<SuperdiffAnalysis>(wk.u, spec);
  auto flow = std::make_unique<Semiflow>(*sd, wk.alpha);
  return {std::move(spec), std::move(wk), std::move(sd), std::move(flow)};
}

// Symmetric Hausdorff distance on the torus; 0 for two empty sets.
double hausdorff(const TorusGeometry& g, const std::vector<Vec>& a, const std::vector<Vec>& b) {
  if (a.empty() && b.empty()) return 0.0;
  if (a.empty() || b.empty()) return INFINITY;
  auto one_way = [&](const std::vector<Vec>& from, const std::vector<Vec>& to) {
    double worst = 0.0;
    for (const auto& x : from) worst = std::max(worst, distance_to_set(g, {x}, to));
    return worst;
  };
  return std::max(one_way(a, b), one_way(b, a));
}

std::vector<Vec> singular_nodes(const SuperdiffAnalysis& sd) {
  std::vector<Vec> out;
  const auto& g = sd.field().geometry();
  for (std::size_t k = 0; k < g.size(); ++k)
    if (sd.singular(k)) out.push_back(g.node(k));
  return out;
}

double log_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) mx += std::log(x[i]), my += std::log(y[i]);
  mx /= double(x.size()), my /= double(y.size());
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (std::log(x[i]) - mx) * (std::log(y[i]) - my);
    sxx += (std::log(x[i]) - mx) * (std::log(x[i]) - mx);
  }
  return sxy / sxx;
}

double median(std::vector<double> v) {
  if (v.empty()) return INFINITY;
  std::nth_element(v.begin(), v.begin() + long(v.size() / 2), v.end());
  return v[v.size() / 2];
}

void alpha_transition(CriterionResult& r) {
  const double cstar = 4.0 / pi;
  const double zero_tol = 1e-3;
  auto spec = make_system("pendulum");
  LaxOleinik lo(spec, TorusGeometry(1, 512));
  // Decide alpha(c) > threshold from the bracket; fall back to the midpoint if undecided.
  auto above = [&](double c, double threshold) {
    AlphaOptions o;
    o.threshold = threshold;
    o.max_iter = 20000;
    auto a = compute_alpha(lo, Vec(c, 0), o);
    if (a.lower > threshold) return true;
    if (a.upper < threshold) return false;
    return a.alpha > threshold;
  };
  bool ok = true;
  int zero_checked = 0, positive_checked = 0;
  for (double c : {0.0, 0.4, 0.8, 1.2, cstar}) {
    for (double s : {1.0, -1.0}) {
      ok &= !above(s * c, zero_tol);
      ++zero_checked;
    }
  }
  for (double c : {cstar + 0.05, 1.5, 2.0, 3.0}) {
    for (double s : {1.0, -1.0}) {
      ok &= above(s * c, 1e-3);
      ++positive_checked;
    }
  }
  double lo_c = 1.0, hi_c = 1.6;
  while (hi_c - lo_c > 5e-3) {
    const double mid = 0.5 * (lo_c + hi_c);
    (above(mid, zero_tol) ? hi_c : lo_c) = mid;
  }
  const double located = 0.5 * (lo_c + hi_c);
  r.metric("zero_side_values", zero_checked);
  r.metric("positive_side_values", positive_checked);
  r.metric("c_star_located", located);
  r.metric("c_star_error", std::abs(located - cstar));
  r.pass = ok && std::abs(located - cstar) <= 1e-2;
  if (!ok) r.note = "alpha sign pattern violated";
}

void pendulum_solution(CriterionResult& r) {
  auto s = solve("pendulum", {}, Vec::Zero(), 512);
  const auto& g = s.wk.u.geometry();
  auto exact = ScalarField::sample(g, [](const Vec& x) { return 2.0 / pi * (1.0 - std::abs(std::cos(pi * x[0]))); });
  const double err = s.wk.u.sup_distance(exact);
  const double hs = hausdorff(g, singular_nodes(*s.sd), {Vec(0.5, 0)});
  const double hc = hausdorff(g, s.sd->critical_points(), {Vec(0, 0), Vec(0.5, 0)});
  r.metric("sup_error", err);
  r.metric("sing_hausdorff", hs);
  r.metric("crit_hausdorff", hc);
  r.metric("alpha", s.wk.alpha);
  r.pass = err <= 2e-2 && hs <= g.h() && hc <= g.h();
}

void free_system(CriterionResult& r) {
  auto spec = make_system("free");
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double t0 = t0_estimate(spec);
  double worst_action = 0.0;
  for (int i = 0; i < 100; ++i) {
    const double x = unit(rng), y = x + 2.0 * unit(rng) - 1.0, t = t0 * (0.05 + 0.95 * unit(rng));
    auto m = fundamental_solution(spec, Vec(x, 0), Vec(y, 0), t, 0.0);
    worst_action = std::max(worst_action, std::abs(m.action - (y - x) * (y - x) / (2 * t)));
  }
  double worst_alpha = 0.0;
  std::size_t critical = 0;
  for (double c : {0.5, 1.0, 2.0}) {
    auto s = solve("free", {}, Vec(c, 0), 512);
    worst_alpha = std::max(worst_alpha, std::abs(s.wk.alpha - 0.5 * c * c));
    critical += s.sd->critical_points().size();
  }
  r.metric("action_max_error", worst_action);
  r.metric("alpha_max_error", worst_alpha);
  r.metric("critical_points", double(critical));
  r.pass = worst_action <= 1e-6 && worst_alpha <= 1e-3 && critical == 0;
}

void semiflow_identities(CriterionResult& r) {
  // Hard monotonicity: integrate() throws InvariantError on a drop of v.
  int trajectories = 0;
  double max_drop = 0.0;
  std::vector<double> rel_errors;
  for (double c : {0.0, 0.5, 1.0}) {
    auto s = solve("pendulum", {}, Vec(c, 0), 512);
    const double tau = default_flow_step(s.spec);
    for (int i = 0; i < 20; ++i) {
      for (auto m : {FlowMethod::intrinsic, FlowMethod::selection_ode}) {
        auto tr = s.flow->integrate(Vec(0.025 + 0.05 * i, 0), 3.0, tau, m);
        ++trajectories;
        max_drop = std::max(max_drop, tr.max_v_drop);
        if (m != FlowMethod::intrinsic) continue;
        for (std::size_t k = 0; k + 1 < tr.size(); ++k) {
          const Vec& p = tr.selected_p[k];
          if (p.norm() <= s.sd->crit_tol()) continue;
          const double rate = p.dot(s.spec.A(tr.lift[k]) * p);
          const double fd = (tr.v_values[k + 1] - tr.v_values[k]) / tau;
          rel_errors.push_back(std::abs(fd - rate) / rate);
        }
      }
    }
  }
  {
    auto s = solve("pendulum2d", {}, Vec::Zero(), 64);
    const double tau = default_flow_step(s.spec);
    for (int i = 0; i < 6; ++i)
      for (auto m : {FlowMethod::intrinsic, FlowMethod::selection_ode}) {
        auto tr = s.flow->integrate(Vec(0.1 + 0.13 * i, 0.07 + 0.11 * i), 2.0, tau, m);
        ++trajectories;
        max_drop = std::max(max_drop, tr.max_v_drop);
      }
  }
  const double med = median(rel_errors);

  // Cross-method agreement in the smooth regime, fitted as d(tau) = floor + C tau.
  // The floor is the grid-level difference between the two slope reconstructions.
  auto s = solve("pendulum", {}, Vec::Zero(), 512);
  const std::vector<double> taus{0.02, 0.01, 0.005};
  double worst_C = 0.0, worst_floor = 0.0, worst_fit = 0.0, worst_raw_slope = INFINITY;
  for (double x0 : {0.05, 0.1, 0.15}) {
    std::vector<double> d;
    for (double tau : taus) {
      const Vec a = s.flow->flow(Vec(x0, 0), 0.2, tau, FlowMethod::intrinsic);
      const Vec b = s.flow->flow(Vec(x0, 0), 0.2, tau, FlowMethod::selection_ode);
      d.push_back((a - b).norm());
    }
    double mt = 0, md = 0;
    for (std::size_t i = 0; i < 3; ++i) mt += taus[i] / 3, md += d[i] / 3;
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < 3; ++i) sxy += (taus[i] - mt) * (d[i] - md), sxx += (taus[i] - mt) * (taus[i] - mt);
    const double C = sxy / sxx, floor = md - C * mt;
    double fit = 0.0;
    for (std::size_t i = 0; i < 3; ++i) fit = std::max(fit, std::abs(d[i] - floor - C * taus[i]) / d[i]);
    worst_C = std::max(worst_C, C);
    worst_floor = std::max(worst_floor, std::abs(floor));
    worst_fit = std::max(worst_fit, fit);
    worst_raw_slope = std::min(worst_raw_slope, log_slope(taus, d));
  }
  const double h = s.wk.u.geometry().h();
  r.metric("trajectories", trajectories);
  r.metric("max_v_drop", max_drop);
  r.metric("derivative_identity_median_rel_error", med);
  r.metric("cross_method_C", worst_C);
  r.metric("cross_method_floor", worst_floor);
  r.metric("cross_method_fit_rel_residual", worst_fit);
  r.metric("cross_method_raw_log_slope", worst_raw_slope);
  r.pass = med <= 0.05 && std::isfinite(worst_C) && worst_C > 0 && worst_floor <= h && worst_fit <= 0.1;
}

struct ChainCheck {
  double recurrent_vs_critical = INFINITY;
  double fixed_vs_critical = INFINITY;
  std::size_t recurrent = 0, critical = 0, fixed = 0;
};

ChainCheck chain_check(Solved& s) {
  ChainOptions opts;
  SampledFlowMap phi(*s.flow, opts);
  auto g = build_chain_graph(phi, opts);
  auto cr = chain_recurrent_set(g);
  auto crit = cells_containing(g, s.sd->critical_points());
  auto fixed = fixed_point_cells(phi, g, s.flow->cluster_tol());
  return {cell_hausdorff(g, cr, crit), cell_hausdorff(g, fixed, crit), cr.size(), crit.size(), fixed.size()};
}

void conley_identity(CriterionResult& r) {
  bool ok = true;
  auto s1 = solve("pendulum", {}, Vec::Zero(), 512);
  auto c1 = chain_check(s1);
  r.metric("pendulum_hausdorff", c1.recurrent_vs_critical);
  r.metric("pendulum_recurrent_cells", double(c1.recurrent));
  ok &= c1.recurrent_vs_critical <= 1.0;

  const auto start = std::chrono::steady_clock::now();
  auto s2 = solve("pendulum2d", {}, Vec::Zero(), 128);
  auto c2 = chain_check(s2);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  r.metric("pendulum2d_hausdorff", c2.recurrent_vs_critical);
  r.metric("pendulum2d_recurrent_cells", double(c2.recurrent));
  r.metric("pendulum2d_seconds", secs);
  ok &= c2.recurrent_vs_critical <= 1.0 && secs <= 600.0;

  for (auto [name, params] : {std::pair<std::string, std::vector<double>>{"free", {}}, {"nearly_integrable", {1e-3}}}) {
    auto s = solve(name, params, Vec(1, 0), 512);
    auto c = chain_check(s);
    r.metric(name + "_recurrent_cells", double(c.recurrent));
    r.metric(name + "_critical_cells", double(c.critical));
    ok &= c.recurrent == 0 && c.critical == 0;
  }
  r.pass = ok;
}

void fixed_point_identity(CriterionResult& r) {
  auto s1 = solve("pendulum", {}, Vec::Zero(), 512);
  auto c1 = chain_check(s1);
  auto s2 = solve("pendulum2d", {}, Vec::Zero(), 128);
  auto c2 = chain_check(s2);
  r.metric("pendulum_hausdorff", c1.fixed_vs_critical);
  r.metric("pendulum_fixed_cells", double(c1.fixed));
  r.metric("pendulum2d_hausdorff", c2.fixed_vs_critical);
  r.metric("pendulum2d_fixed_cells", double(c2.fixed));
  r.pass = c1.fixed_vs_critical <= 1.0 && c2.fixed_vs_critical <= 1.0;
}

void nearly_integrable_scaling(CriterionResult& r) {
  const std::vector<double> eps{1e-4, 1e-3, 1e-2};
  std::vector<double> lip, lip_resonant;
  std::size_t critical = 0;
  for (double e : eps) {
    auto s = solve("nearly_integrable", {e}, Vec(1, 0), 512);
    lip.push_back(s.wk.u.lipschitz());
    critical += s.sd->critical_points().size();
    auto z = solve("nearly_integrable", {e}, Vec::Zero(), 512);
    lip_resonant.push_back(z.wk.u.lipschitz());
  }
  const double slope = log_slope(eps, lip);
  r.metric("lip_exponent_c1", slope);
  r.metric("lip_exponent_c0", log_slope(eps, lip_resonant));
  for (std::size_t i = 0; i < eps.size(); ++i) r.metric(fmt::format("lip_c1_eps_{:g}", eps[i]), lip[i]);
  r.metric("critical_points_c1", double(critical));
  r.pass = std::abs(slope - 0.5) <= 0.1 && critical == 0;
  if (!r.pass && critical == 0)
    r.note = "Lip(u_c) at c = 1 scales linearly in eps (non-resonant class); the sqrt(eps) rate appears only at resonance";
}

void aubry_checks(CriterionResult& r) {
  auto spec = make_system("pendulum");
  const double h00 = peierls_barrier(spec, Vec(0, 0), Vec(0, 0), 0.0);
  const double hhh = peierls_barrier(spec, Vec(0.5, 0), Vec(0.5, 0), 0.0);
  auto a = aubry_set(spec, 0.0);
  const TorusGeometry& g = a.table.geometry;
  const double set_err = hausdorff(g, a.points, {Vec(0, 0)});
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<std::size_t> pick(0, a.table.sources.size() - 1);
  double excess = 0.0;
  for (int i = 0; i < 200; ++i) {
    const auto x = pick(rng), y = pick(rng), z = pick(rng);
    excess = std::max(excess, a.table.between(x, z) - a.table.between(x, y) - a.table.between(y, z));
  }
  r.metric("h_0_0", h00);
  r.metric("h_half_half", hhh);
  r.metric("aubry_hausdorff", set_err);
  r.metric("aubry_cell", a.cell);
  r.metric("triangle_max_excess", excess);
  r.pass = std::abs(h00) <= 1e-3 && std::abs(hhh - 4.0 / pi) <= 2e-2 && set_err <= a.cell && excess <= 1e-9;
}

void bounded_components(CriterionResult& r) {
  bool ok = true;
  for (auto [name, grid] : {std::pair<std::string, int>{"pendulum", 512}, {"pendulum2d", 128}}) {
    auto s = solve(name, {}, Vec::Zero(), grid);
    int bounded = 0, with_critical = 0;
    for (const auto& comp : s.sd->singular_components()) {
      if (comp.meets_window_boundary) continue;
      ++bounded;
      with_critical += comp.contains_critical;
    }
    r.metric(name + "_bounded_components", bounded);
    r.metric(name + "_with_critical", with_critical);
    ok &= bounded == with_critical;
  }
  r.pass = ok;
}

// Two-variable oracle for the (1, 2) orbit: grid scan, then alternating golden sections.
double brute_force_period_two(const GeneratingFunction& h) {
  auto F = [&](double a, double b) { return h(a, b) + h(b, a + 1.0); };
  double best = INFINITY, ba = 0, bb = 0;
  for (int i = 0; i < 400; ++i)
    for (int j = 0; j < 800; ++j) {
      const double a = i / 400.0, b = a - 0.5 + 2.0 * j / 800.0;
      const double f = F(a, b);
      if (f < best) best = f, ba = a, bb = b;
    }
  auto golden_min = [](auto f, double lo, double hi) {
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo), f1 = f(x1), f2 = f(x2);
    for (int it = 0; it < 80; ++it) {
      if (f1 < f2) hi = x2, x2 = x1, f2 = f1, x1 = hi - g * (hi - lo), f1 = f(x1);
      else lo = x1, x1 = x2, f1 = f2, x2 = lo + g * (hi - lo), f2 = f(x2);
    }
    return 0.5 * (lo + hi);
  };
  for (int round = 0; round < 40; ++round) {
    ba = golden_min([&](double a) { return F(a, bb); }, ba - 0.01, ba + 0.01);
    bb = golden_min([&](double b) { return F(ba, b); }, bb - 0.01, bb + 0.01);
  }
  return std::min(best, F(ba, bb));
}

void twist_suite(CriterionResult& r) {
  auto flat = GeneratingFunction::standard_map(0.0);
  double rot_err = 0.0;
  for (auto [p, q] : {std::pair<long, long>{0, 1}, {1, 3}, {2, 5}, {3, 8}, {5, 13}}) {
    auto cfg = minimal_periodic_config(flat, p, q);
    rot_err = std::max(rot_err, std::abs(rotation_number(cfg) - double(p) / double(q)));
  }
  auto h = GeneratingFunction::standard_map(0.5);
  const double action = minimal_periodic_config(h, 1, 2).action;
  const double oracle = brute_force_period_two(h);

  double worst_sum = 0.0;
  long q = 0;
  for (auto [pp, qq] : convergents(golden, 1L << 20))
    if (qq >= 50) {
      q = qq;
      break;
    }
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (double k : {1.2, 2.0}) {
    auto hk = GeneratingFunction::standard_map(k);
    for (int trial = 0; trial < 3; ++trial) {
      // The full gap first, then random sub-intervals of it.
      const Gap g = minimal_gap(hk, golden, unit(rng));
      const double x0 = trial == 0 ? g.x : g.x + 0.5 * unit(rng) * g.width();
      const double y0 = trial == 0 ? g.y : x0 + (0.1 + 0.9 * unit(rng)) * (g.y - x0);
      auto gaps = gap_sequence(hk, golden, x0, y0, int(2 * q));
      for (std::size_t start = 0; start + std::size_t(q) <= gaps.size(); start += std::size_t(q)) {
        double sum = 0.0;
        for (std::size_t i = start; i < start + std::size_t(q); ++i) {
          sum += gaps[i].width();
          worst_sum = std::max(worst_sum, sum);
        }
      }
    }
  }

  auto gf = distance_generating_function(make_system("free", {2}), 256);
  double gf_err = 0.0;
  for (int i = 0; i < 10; ++i)
    for (int j = -14; j <= 14; ++j) {
      const double x = 0.1 * i, d = 0.1 * j;
      gf_err = std::max(gf_err, std::abs(gf(x, x + d) - std::sqrt(1.0 + d * d)));
    }
  r.metric("rotation_number_max_error", rot_err);
  r.metric("period_two_action", action);
  r.metric("period_two_oracle", oracle);
  r.metric("gap_partial_sum_max", worst_sum);
  r.metric("flat_distance_max_error", gf_err);
  r.pass = rot_err <= 1e-12 && std::abs(action - oracle) <= 1e-4 && worst_sum <= 1.0 + 1e-6 && gf_err <= 2e-2;
}

void sing_near_minimal_set(CriterionResult& r) {
  auto rep = sing_near_aubry_check(make_system("bump_metric"), 0.05);
  r.metric("distance", rep.distance);
  r.metric("p", double(rep.p));
  r.metric("q", double(rep.q));
  r.metric("c0", rep.c[0]);
  r.metric("c1", rep.c[1]);
  r.metric("alpha", rep.alpha);
  r.metric("singular_nodes", double(rep.singular_nodes));
  r.metric("weak_kam_iterations", rep.iterations);
  r.metric("proxy_invariance", rep.proxy_invariance);
  r.pass = rep.pass;
  if (rep.vacuous) r.note = "no singular nodes";
  else if (!rep.weak_kam_converged) r.note = "weak KAM solve did not reach tol_fix";
}

}  // namespace

const std::vector<Criterion>& acceptance_criteria() {
  static const std::vector<Criterion> list{
      {1, "pendulum alpha transition", 120, alpha_transition},
      {2, "pendulum weak KAM solution", 60, pendulum_solution},
      {3, "free system", 0, free_system},
      {4, "semiflow identities", 0, semiflow_identities},
      {5, "chain recurrence equals criticality", 0, conley_identity},
      {6, "time-1 fixed points equal criticality", 0, fixed_point_identity},
      {7, "nearly integrable Lipschitz scaling", 0, nearly_integrable_scaling},
      {8, "Peierls barrier and Aubry set", 0, aubry_checks},
      {9, "bounded singular components carry critical points", 0, bounded_components},
      {10, "twist map suite", 0, twist_suite},
      {11, "singularities near the minimal set (bump metric)", 1800, sing_near_minimal_set},
  };
  return list;
}

CriterionResult run_criterion(int id) {
  const auto& list = acceptance_criteria();
  auto it = std::find_if(list.begin(), list.end(), [&](const Criterion& c) { return c.id == id; });
  if (it == list.end()) throw ConfigError(fmt::format("no acceptance criterion {}", id));
  CriterionResult r;
  r.id = id;
  r.title = it->title;
  const auto start = std::chrono::steady_clock::now();
  try {
    it->body(r);
  } catch (const Error& e) {
    r.pass = false;
    r.note = e.what();
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (r.pass && it->time_limit > 0 && r.seconds > it->time_limit) {
    r.pass = false;
    r.note = fmt::format("runtime {:.0f}s exceeds {:.0f}s", r.seconds, it->time_limit);
  }
  return r;
}

}  // namespace wkam
