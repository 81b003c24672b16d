#include "wkam/semiflow.hpp"

#include "wkam/action.hpp"
#include "wkam/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

namespace wkam {

std::string to_string(FlowMethod m) { return m == FlowMethod::intrinsic ? "intrinsic" : "selection-ode"; }

FlowMethod parse_flow_method(const std::string& s) {
  if (s == "intrinsic") return FlowMethod::intrinsic;
  if (s == "selection-ode" || s == "selection_ode") return FlowMethod::selection_ode;
  throw ConfigError(fmt::format("unknown flow method '{}'", s));
}

std::string to_string(OmegaKind k) {
  switch (k) {
    case OmegaKind::stationary: return "stationary";
    case OmegaKind::closed: return "closed";
    case OmegaKind::recurrent_unbounded_return: return "recurrent-unbounded-return";
    default: return "undecided";
  }
}

double default_flow_step(const SystemSpec& spec) { return std::min(0.5 * t0_estimate(spec), 0.01); }

Semiflow::Semiflow(const SuperdiffAnalysis& sd, double alpha, const FlowOptions& opts)
    : sd_(sd), spec0_(sd.system().with_c(Vec::Zero())), alpha_(alpha), opts_(opts) {
  const auto& gr = sd.system().growth();
  speed_bound_ = gr.a_max * (sd.field().lipschitz() + sd.system().c().norm());
  lambda0_ = std::max(speed_bound_, 1e-3);
}

double Semiflow::v(const Vec& lift) const { return sd_.system().c().dot(geometry().clean(lift)) + sd_.field()(lift); }

double Semiflow::objective(const Vec& x, const Vec& y, double tau) const {
  ActionOptions o;
  double a0 = detail::straight_start_action(spec0_, x, y, tau, o);
  return sd_.field()(y) - a0 + sd_.system().c().dot(y - x);
}

namespace {
template <class F>
double golden_max(F&& f, double a, double b, int iters = 48) {
  const double r = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - r * (b - a), d = a + r * (b - a);
  double fc = f(c), fd = f(d);
  for (int i = 0; i < iters; ++i) {
    if (fc >= fd) {
      b = d, d = c, fd = fc;
      c = b - r * (b - a);
      fc = f(c);
    } else {
      a = c, c = d, fc = fd;
      d = a + r * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}
}  // namespace

Vec Semiflow::step_intrinsic(const Vec& x0, double tau, bool* ambiguous) {
  const auto& g = geometry();
  const Vec x = g.clean(x0);
  const double h = g.h();
  for (int attempt = 0; attempt < 2; ++attempt) {
    const double r = lambda0_ * tau * opts_.safety + 2 * h;
    struct Cand {
      Vec y;
      double f;
    };
    Cand best{x, objective(x, x, tau)}, second{x, -INFINITY};
    long i0 = long(std::floor((x[0] - r) / h)), i1 = long(std::ceil((x[0] + r) / h));
    long j0 = 0, j1 = 0;
    if (g.dim() == 2) j0 = long(std::floor((x[1] - r) / h)), j1 = long(std::ceil((x[1] + r) / h));
    for (long j = j0; j <= j1; ++j)
      for (long i = i0; i <= i1; ++i) {
        Vec y(i * h, j * h);
        if (g.dim() == 1) y[1] = 0;
        if ((y - x).norm() > r) continue;
        double f = objective(x, y, tau);
        if (f > best.f) {
          if ((best.y - y).norm() > 2 * h) second = best;
          best = {y, f};
        } else if (f > second.f && (best.y - y).norm() > 2 * h) {
          second = {y, f};
        }
      }
    Vec y = best.y;
    for (int round = 0; round < (g.dim() == 1 ? 1 : 3); ++round)
      for (int axis = 0; axis < g.dim(); ++axis) {
        Vec base = y;
        y[axis] = golden_max(
            [&](double s) {
              Vec p = base;
              p[axis] = s;
              return objective(x, p, tau);
            },
            base[axis] - h, base[axis] + h);
      }
    double fy = objective(x, y, tau);
    if (fy < best.f) y = best.y, fy = best.f;
    if (ambiguous)
      *ambiguous = std::isfinite(second.f) && std::abs(fy - second.f) <= opts_.ambiguity_rel * std::max(1.0, std::abs(fy));
    if ((y - x).norm() <= r - h) return y;
    lambda0_ *= 2.0;
  }
  throw ConvergenceError(fmt::format("intrinsic step from ({}, {}) keeps hitting the scan-ball boundary", x[0], x[1]));
}

Vec Semiflow::step_selection_ode(const Vec& x0, double tau) const {
  const auto& g = geometry();
  Vec x = g.clean(x0);
  const double dt = tau / opts_.substeps;
  double vx = v(x);
  for (int s = 0; s < opts_.substeps; ++s) {
    Vec q = sd_.minimal_selection(x);
    Vec vel = g.clean(sd_.system().A(x) * q);
    double step = dt;
    for (int halving = 0; halving <= 6; ++halving, step *= 0.5) {
      Vec y = x + step * vel;
      double vy = v(y);
      if (vy >= vx) {
        x = y;
        vx = vy;
        break;
      }
    }
  }
  return x;
}

Vec Semiflow::step(const Vec& x, double tau, FlowMethod m, bool* ambiguous) {
  return m == FlowMethod::intrinsic ? step_intrinsic(x, tau, ambiguous) : step_selection_ode(x, tau);
}

Vec Semiflow::flow(const Vec& x, double T, double tau, FlowMethod m) {
  const long n = std::max(1L, std::lround(T / tau));
  Vec y = geometry().clean(x);
  for (long i = 0; i < n; ++i) y = step(y, tau, m);
  return y;
}

Trajectory Semiflow::integrate(const Vec& x0, double T, double tau, FlowMethod m) {
  if (!(tau > 0) || tau > t0_estimate(sd_.system()) * (1 + 1e-12))
    throw ConfigError(fmt::format("flow step {} outside (0, t0]", tau));
  const auto& g = geometry();
  Trajectory tr;
  tr.step = tau;
  tr.method = m;
  const long n = std::max(1L, std::lround(T / tau));
  const double slack = opts_.monotone_slack * g.h() * (sd_.field().lipschitz() + sd_.system().c().norm()) + 1e-12;
  const double max_jump = tau * speed_bound_ * (1 + 1e-6) + 2 * g.h();
  Vec x = g.clean(x0);
  for (long i = 0; i <= n; ++i) {
    tr.times.push_back(i * tau);
    tr.lift.push_back(x);
    tr.selected_p.push_back(sd_.minimal_selection(x));
    tr.v_values.push_back(v(x));
    if (i > 0) {
      double drop = tr.v_values[i - 1] - tr.v_values[i];
      tr.max_v_drop = std::max(tr.max_v_drop, drop);
      if (drop > slack)
        throw InvariantError(fmt::format("v decreased by {:.3g} at step {} of a {} trajectory", drop, i, to_string(m)));
      double jump = (tr.lift[i] - tr.lift[i - 1]).norm();
      if (jump > max_jump)
        throw InvariantError(fmt::format("step {} moved {:.3g}, above the speed bound {:.3g}", i, jump, max_jump));
    }
    if (i == n) break;
    bool amb = false;
    x = step(x, tau, m, &amb);
    tr.ambiguous_steps += amb;
  }
  return tr;
}

OmegaReport omega_limit(const Trajectory& tr, const TorusGeometry& g, double burn_in, double cluster_tol) {
  if (cluster_tol <= 0) cluster_tol = 3.0 * g.h();
  OmegaReport rep;
  const std::size_t start = std::size_t(std::floor(burn_in * double(tr.size())));
  if (tr.size() < 2 || start + 2 > tr.size()) return rep;
  std::vector<Vec> pts;
  for (std::size_t i = start; i < tr.size(); ++i) pts.push_back(tr.torus_point(i, g));

  // Stationary: everything within two cells of the (periodic) mean.
  Vec mean = Vec::Zero();
  for (const auto& p : pts) mean += g.delta(pts[0], p);
  mean = g.wrap(pts[0] + mean / double(pts.size()));
  double spread = 0;
  for (const auto& p : pts) spread = std::max(spread, g.distance(mean, p));
  if (spread <= 2.0 * g.h()) {
    rep.kind = OmegaKind::stationary;
    rep.support = {g.clean(mean)};
    return rep;
  }

  auto leader_clusters = [&](std::size_t count) {
    std::vector<Vec> centres;
    for (std::size_t i = 0; i < count; ++i) {
      bool found = false;
      for (const auto& c : centres)
        if (g.distance(c, pts[i]) <= cluster_tol) {
          found = true;
          break;
        }
      if (!found) centres.push_back(pts[i]);
    }
    return centres;
  };
  rep.support = leader_clusters(pts.size());

  // Returns to the first post-burn-in point.
  std::vector<std::size_t> returns;
  bool away = false;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    bool near = g.distance(pts[0], pts[i]) <= cluster_tol;
    if (!near) away = true;
    if (near && away) {
      // take the closest sample of this visit
      std::size_t best = i;
      while (i + 1 < pts.size() && g.distance(pts[0], pts[i + 1]) <= cluster_tol) {
        ++i;
        if (g.distance(pts[0], pts[i]) < g.distance(pts[0], pts[best])) best = i;
      }
      returns.push_back(best);
      away = false;
    }
  }
  std::vector<int> gaps;
  std::size_t prev = 0;
  for (auto r : returns) gaps.push_back(int(r - prev)), prev = r;
  if (!gaps.empty()) rep.sigma_gap = *std::max_element(gaps.begin(), gaps.end());
  if (gaps.size() >= 5) {
    int N = gaps.back();
    bool constant = true;
    for (std::size_t i = gaps.size() - 5; i < gaps.size(); ++i) constant = constant && std::abs(gaps[i] - N) <= 1;
    if (constant && N >= 2) {
      double closure = 0;
      for (std::size_t i = 0; i + std::size_t(N) < pts.size(); ++i)
        closure = std::max(closure, g.distance(pts[i], pts[i + std::size_t(N)]));
      rep.closure_error = closure;
      if (closure <= cluster_tol) {
        rep.kind = OmegaKind::closed;
        rep.period_estimate = N * tr.step;
        return rep;
      }
    }
  }
  // Returns that never settle into a constant gap, or a support that keeps
  // growing with the horizon, indicate recurrence without a closed orbit.
  const std::size_t half_count = leader_clusters(pts.size() / 2).size();
  if (gaps.size() >= 2 || rep.support.size() * 2 > half_count * 3) {
    rep.kind = OmegaKind::recurrent_unbounded_return;
    return rep;
  }
  return rep;
}

}  // namespace wkam
