#include "wkam/aubry.hpp"

#include <algorithm>
#include <cmath>

namespace wkam {

namespace {

constexpr double unreachable = 1e30;

int barrier_grid(int dim) { return dim == 1 ? 512 : 32; }

}  // namespace

BarrierTable barrier_table(const SystemSpec& spec, const TorusGeometry& geom, double alpha,
                           const std::vector<std::size_t>& sources, const BarrierOptions& opts) {
  if (opts.dt <= 0 || opts.t_max < opts.dt) throw ConfigError("barrier times need 0 < dt <= t_max");
  const SystemSpec zero = spec.with_c(Vec::Zero());
  double tau = default_tau(zero, geom);
  const int per_dt = int(std::ceil(opts.dt / tau - 1e-9));
  tau = opts.dt / per_dt;
  LaxOleinik lo(zero, geom, tau);
  const Vec c = spec.c();
  const std::size_t N = geom.size();

  // Min-plus matrix of the discrete action over one dt.
  std::vector<double> step(N * N);
  for (std::size_t i = 0; i < N; ++i) {
    std::vector<double> w(N, unreachable);
    w[i] = 0.0;
    ScalarField f(geom, std::move(w));
    for (int s = 0; s < per_dt; ++s) f = sweep_minus(lo.kernel(), f, c, alpha);
    std::copy(f.values().begin(), f.values().end(), step.begin() + std::ptrdiff_t(i * N));
  }

  BarrierTable tab;
  tab.geometry = geom;
  tab.sources = sources;
  const int K = int(std::floor(opts.t_max / opts.dt + 1e-9));
  for (int k = 1; k <= K; ++k) tab.times.push_back(k * opts.dt);
  tab.values.assign(sources.size() * N, INFINITY);
  tab.diag_trace.assign(sources.size(), {});
  std::vector<double> row(N), next(N);
  for (std::size_t s = 0; s < sources.size(); ++s) {
    if (sources[s] >= N) throw ConfigError("barrier source outside the grid");
    std::copy_n(step.begin() + std::ptrdiff_t(sources[s] * N), N, row.begin());
    double* best = tab.values.data() + s * N;
    for (int k = 1; k <= K; ++k) {
      if (k > 1) {
        std::fill(next.begin(), next.end(), INFINITY);
        for (std::size_t z = 0; z < N; ++z) {
          const double rz = row[z];
          if (rz >= unreachable * 0.5) continue;
          const double* m = step.data() + z * N;
          for (std::size_t y = 0; y < N; ++y) next[y] = std::min(next[y], rz + m[y]);
        }
        row.swap(next);
      }
      for (std::size_t y = 0; y < N; ++y) best[y] = std::min(best[y], row[y]);
      tab.diag_trace[s].push_back(best[sources[s]]);
    }
  }
  return tab;
}

double peierls_barrier(const SystemSpec& spec, const Vec& x, const Vec& y, double alpha, double t_max, int grid) {
  if (t_max < 10) throw ConfigError("barrier horizon must be at least 10");
  TorusGeometry g(spec.dim(), grid > 0 ? grid : barrier_grid(spec.dim()));
  BarrierOptions o;
  o.t_max = t_max;
  auto tab = barrier_table(spec, g, alpha, {g.nearest(x)}, o);
  return tab.value(0, g.nearest(y));
}

AubryResult aubry_set(const SystemSpec& spec, double alpha, const AubryOptions& opts) {
  TorusGeometry g(spec.dim(), opts.grid > 0 ? opts.grid : barrier_grid(spec.dim()));
  const int stride = opts.stride > 0 ? opts.stride : (spec.dim() == 1 ? 4 : 2);
  if (g.n() % stride != 0) throw ConfigError("aubry stride must divide the grid size");
  std::vector<std::size_t> sources;
  const int m = g.n() / stride;
  for (int j = 0; j < (spec.dim() == 2 ? m : 1); ++j)
    for (int i = 0; i < m; ++i) sources.push_back(g.index(i * stride, j * stride));
  AubryResult out;
  out.cell = stride * g.h();
  out.table = barrier_table(spec, g, alpha, sources, opts.barrier);
  for (std::size_t s = 0; s < sources.size(); ++s)
    if (out.table.diagonal(s) <= opts.tol_aubry) out.points.push_back(g.node(sources[s]));
  return out;
}

CalibrationResult calibration_residual(const SuperdiffAnalysis& sd, const Vec& x, double alpha, double horizon,
                                       bool forward) {
  const auto& u = sd.field();
  const auto& g = u.geometry();
  const auto& spec = sd.system();
  const Vec c = spec.c();
  auto singular_cell = [&](const Vec& p) {
    const long i = long(std::floor(p[0] * g.n())), j = g.dim() == 2 ? long(std::floor(p[1] * g.n())) : 0;
    for (long dj = 0; dj <= (g.dim() == 2 ? 1 : 0); ++dj)
      for (long di = 0; di <= 1; ++di)
        if (sd.singular(g.index(i + di, j + dj))) return true;
    return false;
  };
  if (singular_cell(x)) throw ConfigError("calibration start must lie in a smooth cell");

  const double sign = forward ? 1.0 : -1.0;
  auto velocity = [&](const Vec& p) -> Vec {
    Vec q = c + u.gradient(p);
    if (g.dim() == 1) q[1] = 0;
    Vec v = spec.A(p) * q;
    if (g.dim() == 1) v[1] = 0;
    return v;
  };
  const auto gc = spec.growth();
  const double speed = gc.a_max * (u.lipschitz() + c.norm()) + 1e-12;
  const double dt = std::min(0.01, 0.5 * g.h() / speed);
  const int steps = int(std::ceil(horizon / dt));

  CalibrationResult out;
  Vec p = x;
  // G = u(p) + integral of L^c over the part of the curve between p and x,
  // oriented forward in time; its oscillation bounds every sub-arc defect.
  double integral = 0.0;
  Vec v = velocity(p);
  double lag = eval_lagrangian_c(spec, p, v, alpha);
  double gmin = u(p), gmax = gmin;
  for (int k = 0; k < steps; ++k) {
    const double d = std::min(dt, horizon - k * dt);
    auto f = [&](const Vec& q) { return Vec(sign * velocity(q)); };
    const Vec k1 = f(p), k2 = f(p + 0.5 * d * k1), k3 = f(p + 0.5 * d * k2), k4 = f(p + d * k3);
    const Vec pn = p + d / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
    if (singular_cell(g.wrap(pn))) {
      out.truncated = true;
      break;
    }
    const Vec vn = velocity(pn);
    const double lagn = eval_lagrangian_c(spec, pn, vn, alpha);
    integral += 0.5 * d * (lag + lagn);
    const double G = forward ? u(pn) - integral : u(pn) + integral;
    gmin = std::min(gmin, G);
    gmax = std::max(gmax, G);
    p = pn;
    lag = lagn;
    out.horizon_reached += d;
  }
  out.residual = gmax - gmin;
  out.end = p;
  return out;
}

double distance_to_set(const TorusGeometry& g, const std::vector<Vec>& from, const std::vector<Vec>& to) {
  double best = INFINITY;
  for (const auto& a : from)
    for (const auto& b : to) best = std::min(best, g.distance(a, b));
  return best;
}

SingToAubryReport sing_to_aubry_distance(Semiflow& flow, const std::vector<Vec>& starts, double horizon,
                                         const std::vector<Vec>& aubry, double tau, FlowMethod method) {
  const auto& g = flow.geometry();
  if (tau <= 0) tau = default_flow_step(flow.analysis().system());
  SingToAubryReport rep;
  std::vector<double> ds;
  for (const auto& s : starts) {
    SingToAubryEntry e;
    e.start = s;
    const auto tr = flow.integrate(s, horizon, tau, method);
    e.omega = omega_limit(tr, g, 0.5, flow.cluster_tol());
    std::vector<Vec> support = e.omega.support;
    if (support.empty()) support.push_back(tr.torus_point(tr.size() - 1, g));
    e.distance = distance_to_set(g, support, aubry);
    ds.push_back(e.distance);
    rep.entries.push_back(std::move(e));
  }
  if (!ds.empty()) {
    std::sort(ds.begin(), ds.end());
    rep.min = ds.front();
    rep.median = ds.size() % 2 ? ds[ds.size() / 2] : 0.5 * (ds[ds.size() / 2 - 1] + ds[ds.size() / 2]);
  }
  return rep;
}

}  // namespace wkam
