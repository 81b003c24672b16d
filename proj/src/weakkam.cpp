#include "wkam/weakkam.hpp"

#include "wkam/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

namespace wkam {

namespace {

struct Offset {
  int o0, o1;
  std::size_t col;
};

std::vector<Offset> disk_offsets(const ActionKernel& k) {
  std::vector<Offset> out;
  const int R = k.radius();
  const int r1 = k.geometry().dim() == 2 ? R : 0;
  for (int o1 = -r1; o1 <= r1; ++o1)
    for (int o0 = -R; o0 <= R; ++o0)
      if (k.inside(o0, o1)) out.push_back({o0, o1, k.column(o0, o1)});
  return out;
}

// wrap[m + offset] = (m) mod n for m in [-offset, offset + n).
struct WrapTable {
  std::vector<long> w;
  long offset;
  WrapTable(long n, long reach) : w(std::size_t(n + 2 * reach)), offset(reach) {
    for (long m = -reach; m < n + reach; ++m) w[std::size_t(m + reach)] = ((m % n) + n) % n;
  }
  long operator()(long m) const { return w[std::size_t(m + offset)]; }
};

bool on_rim(int o0, int o1, int R) { return double(o0) * o0 + double(o1) * o1 > (R - 1.5) * (R - 1.5); }

// Minimum of the quadratic through the 3x3 stencil around the argmin, when it
// is convex and its vertex stays inside the stencil.
template <class F>
double quadratic_refine(F&& f, double f0, double sign) {
  double fx1 = sign * f(1, 0), fx0 = sign * f(-1, 0), fy1 = sign * f(0, 1), fy0 = sign * f(0, -1);
  double fpp = sign * f(1, 1), fpm = sign * f(1, -1), fmp = sign * f(-1, 1), fmm = sign * f(-1, -1);
  double s0 = sign * f0;
  // Huge entries mark unreachable nodes (barrier rows); a fit through them is meaningless.
  constexpr double huge = 1e20;
  for (double t : {fx1, fx0, fy1, fy0, fpp, fpm, fmp, fmm})
    if (!(std::abs(t) < huge)) return f0;
  Vec g{0.5 * (fx1 - fx0), 0.5 * (fy1 - fy0)};
  Mat H;
  H(0, 0) = fx1 - 2 * s0 + fx0;
  H(1, 1) = fy1 - 2 * s0 + fy0;
  H(0, 1) = H(1, 0) = 0.25 * (fpp - fpm - fmp + fmm);
  double det = H.determinant();
  if (!(H(0, 0) > 0 && det > 0)) return f0;
  Vec s = -H.inverse() * g;
  if (s.cwiseAbs().maxCoeff() > 1.0) return f0;
  double v = s0 + 0.5 * g.dot(s);
  return sign * std::min(v, s0);
}

ScalarField sweep_1d(const ActionKernel& k, const ScalarField& u, double c, double alpha, bool minus,
                     SweepReport* rep) {
  const auto& g = k.geometry();
  const long n = g.n();
  const int R = k.radius(), W = k.width();
  const double h = g.h();
  WrapTable wrap(n, R + 1);
  std::vector<double> out(g.size()), f(static_cast<std::size_t>(W)), a(static_cast<std::size_t>(W));
  SweepReport local;
  const double sign = minus ? 1.0 : -1.0;
  for (long j = 0; j < n; ++j) {
    // f holds sign * candidate, so both operators become a minimization.
    for (int q = 0; q < W; ++q) {
      int o = q - R;
      if (minus) {
        a[q] = k.row(std::size_t(j))[q] - c * o * h;
        f[q] = u[std::size_t(wrap(j - o))] + a[q];
      } else {
        a[q] = k.row(std::size_t(wrap(j + o)))[q] - c * o * h;
        f[q] = -u[std::size_t(wrap(j + o))] + a[q];
      }
    }
    int arg = int(std::min_element(f.begin(), f.end()) - f.begin());
    double best = f[arg];
    for (int q = 0; q + 1 < W; ++q) {
      double kap = 0;
      int cnt = 0;
      if (q > 0) kap += a[q - 1] - 2 * a[q] + a[q + 1], ++cnt;
      if (q + 2 < W) kap += a[q] - 2 * a[q + 1] + a[q + 2], ++cnt;
      if (cnt == 0) continue;
      kap /= cnt;
      if (!(kap > 0)) continue;
      double df = f[q + 1] - f[q];
      double th = 0.5 - df / kap;
      if (th <= 0 || th >= 1) continue;
      double v = f[q] + th * df - 0.5 * kap * th * (1 - th);
      if (v < best) {
        best = v;
        arg = th < 0.5 ? q : q + 1;
      }
    }
    int o = arg - R;
    local.max_offset = std::max(local.max_offset, std::abs(o));
    if (std::abs(o) >= R) local.boundary_hit = true;
    out[std::size_t(j)] = sign * best + sign * alpha * k.tau();
  }
  if (rep) *rep = local;
  return ScalarField(g, std::move(out), u.label());
}

ScalarField sweep_2d(const ActionKernel& k, const ScalarField& u, const Vec& c, double alpha, bool minus,
                     SweepReport* rep) {
  const auto& g = k.geometry();
  const long n = g.n();
  const int R = k.radius();
  const double h = g.h();
  WrapTable wrap(n, R + 2);
  const auto offs = disk_offsets(k);
  std::vector<double> out(g.size());
  SweepReport local;
  const double sign = minus ? 1.0 : -1.0;
  const auto& vals = u.values();
  for (long j = 0; j < n; ++j)
    for (long i = 0; i < n; ++i) {
      const std::size_t node = std::size_t(i + n * j);
      auto cand = [&](int o0, int o1) -> double {
        if (!k.inside(o0, o1)) return INFINITY;
        double lin = (c[0] * o0 + c[1] * o1) * h;
        if (minus) {
          std::size_t y = std::size_t(wrap(i - o0) + n * wrap(j - o1));
          return vals[y] + k.row(node)[k.column(o0, o1)] - lin;
        }
        std::size_t y = std::size_t(wrap(i + o0) + n * wrap(j + o1));
        return -vals[y] + k.row(y)[k.column(o0, o1)] - lin;
      };
      double best = INFINITY;
      int b0 = 0, b1 = 0;
      if (minus) {
        const double* row = k.row(node);
        for (const auto& o : offs) {
          std::size_t y = std::size_t(wrap(i - o.o0) + n * wrap(j - o.o1));
          double v = vals[y] + row[o.col] - (c[0] * o.o0 + c[1] * o.o1) * h;
          if (v < best) best = v, b0 = o.o0, b1 = o.o1;
        }
      } else {
        for (const auto& o : offs) {
          std::size_t y = std::size_t(wrap(i + o.o0) + n * wrap(j + o.o1));
          double v = -vals[y] + k.row(y)[o.col] - (c[0] * o.o0 + c[1] * o.o1) * h;
          if (v < best) best = v, b0 = o.o0, b1 = o.o1;
        }
      }
      best = quadratic_refine([&](int d0, int d1) { return cand(b0 + d0, b1 + d1); }, best, 1.0);
      local.max_offset = std::max(local.max_offset, std::max(std::abs(b0), std::abs(b1)));
      if (on_rim(b0, b1, R)) local.boundary_hit = true;
      out[node] = sign * best + sign * alpha * k.tau();
    }
  if (rep) *rep = local;
  return ScalarField(g, std::move(out), u.label());
}

ScalarField sweep(const ActionKernel& k, const ScalarField& u, const Vec& c, double alpha, bool minus,
                  SweepReport* rep) {
  if (!(u.geometry() == k.geometry())) throw ConfigError("field and kernel live on different grids");
  return k.geometry().dim() == 1 ? sweep_1d(k, u, c[0], alpha, minus, rep) : sweep_2d(k, u, c, alpha, minus, rep);
}

double speed_estimate(const SystemSpec& spec, const Vec& c) {
  const auto& gr = spec.growth();
  double p2 = gr.lambda_max * (gr.a_max * c.squaredNorm() + 2.0 * gr.potential_oscillation);
  return gr.a_max * std::sqrt(p2);
}

}  // namespace

ActionKernel::ActionKernel(const SystemSpec& spec, const TorusGeometry& geom, double tau, int radius)
    : geom_(geom), tau_(tau), radius_(radius) {
  if (!(tau > 0)) throw ConfigError("kernel step must be positive");
  if (radius < 1) throw ConfigError("kernel radius must be at least one node");
  fill(spec.with_c(Vec::Zero()), -1);
}

void ActionKernel::grow(const SystemSpec& spec, int new_radius) {
  if (new_radius <= radius_) return;
  const int old = radius_;
  const auto old_table = std::move(table_);
  const std::size_t old_stride = stride();
  const int old_width = width();
  radius_ = new_radius;
  table_.assign(geom_.size() * stride(), INFINITY);
  const int r1 = geom_.dim() == 2 ? old : 0;
  for (std::size_t node = 0; node < geom_.size(); ++node)
    for (int o1 = -r1; o1 <= r1; ++o1)
      for (int o0 = -old; o0 <= old; ++o0) {
        std::size_t oc = geom_.dim() == 1 ? std::size_t(o0 + old) : std::size_t(o0 + old) + std::size_t(o1 + old) * old_width;
        table_[node * stride() + column(o0, o1)] = old_table[node * old_stride + oc];
      }
  fill(spec.with_c(Vec::Zero()), old);
}

void ActionKernel::fill(const SystemSpec& spec, int old_radius) {
  if (old_radius < 0) table_.assign(geom_.size() * stride(), INFINITY);
  const int R = radius_;
  const int r1 = geom_.dim() == 2 ? R : 0;
  const double h = geom_.h();
  std::vector<std::pair<int, int>> fresh;
  for (int o1 = -r1; o1 <= r1; ++o1)
    for (int o0 = -R; o0 <= R; ++o0)
      if (inside(o0, o1) && !(old_radius >= 0 && o0 * o0 + o1 * o1 <= old_radius * old_radius))
        fresh.emplace_back(o0, o1);
  auto positive = [](int o0, int o1) { return o0 > 0 || (o0 == 0 && o1 >= 0); };
  ActionOptions opts;
  for (std::size_t node = 0; node < geom_.size(); ++node) {
    Vec x = geom_.node(node);
    for (auto [o0, o1] : fresh)
      if (positive(o0, o1))
        table_[node * stride() + column(o0, o1)] =
            detail::straight_start_action(spec, x - Vec(o0 * h, o1 * h), x, tau_, opts);
  }
  // Reversibility of mechanical Lagrangians: A(y,x) = A(x,y).
  for (std::size_t node = 0; node < geom_.size(); ++node) {
    auto [i, j] = geom_.coords(node);
    for (auto [o0, o1] : fresh)
      if (!positive(o0, o1))
        table_[node * stride() + column(o0, o1)] = table_[geom_.index(i - o0, j - o1) * stride() + column(-o0, -o1)];
  }
}

ScalarField sweep_minus(const ActionKernel& k, const ScalarField& u, const Vec& c, double alpha, SweepReport* rep) {
  return sweep(k, u, c, alpha, true, rep);
}

ScalarField sweep_plus(const ActionKernel& k, const ScalarField& u, const Vec& c, double alpha, SweepReport* rep) {
  return sweep(k, u, c, alpha, false, rep);
}

double default_tau(const SystemSpec& spec, const TorusGeometry& geom) {
  double t = 0.5 * t0_estimate(spec);
  if (geom.dim() == 2) t = std::min(t, 3.0 * geom.h());
  return t;
}

int default_grid(int dim) { return dim == 1 ? 512 : 128; }

LaxOleinik::LaxOleinik(const SystemSpec& spec, const TorusGeometry& geom, double tau)
    : spec_(spec.with_c(Vec::Zero())),
      geom_(geom),
      kernel_(spec_, geom, tau > 0 ? tau : default_tau(spec, geom),
              std::min(2 * geom.n(),
                       int(std::ceil((tau > 0 ? tau : default_tau(spec, geom)) * speed_estimate(spec, spec.c()) /
                                     geom.h())) + 3)),
      max_radius_(2 * geom.n()) {
  if (spec.dim() != geom.dim()) throw ConfigError("system and grid dimensions differ");
}

ScalarField LaxOleinik::minus(const ScalarField& u, const Vec& c, double alpha) {
  for (;;) {
    SweepReport rep;
    ScalarField w = sweep_minus(kernel_, u, c, alpha, &rep);
    if (!rep.boundary_hit || kernel_.radius() >= max_radius_) return w;
    kernel_.grow(spec_, std::min(max_radius_, int(std::ceil(kernel_.radius() * 1.3)) + 1));
  }
}

ScalarField LaxOleinik::plus(const ScalarField& u, const Vec& c, double alpha) {
  for (;;) {
    SweepReport rep;
    ScalarField w = sweep_plus(kernel_, u, c, alpha, &rep);
    if (!rep.boundary_hit || kernel_.radius() >= max_radius_) return w;
    kernel_.grow(spec_, std::min(max_radius_, int(std::ceil(kernel_.radius() * 1.3)) + 1));
  }
}

namespace {

struct IncrementStats {
  double lo, hi;
};

IncrementStats increment(const ScalarField& before, const ScalarField& after) {
  IncrementStats s{INFINITY, -INFINITY};
  for (std::size_t k = 0; k < before.size(); ++k) {
    double d = after[k] - before[k];
    s.lo = std::min(s.lo, d);
    s.hi = std::max(s.hi, d);
  }
  return s;
}

void anchor(ScalarField& u) { u += -u.min(); }

// u <- (1 - theta) u + theta (w - min w), then re-anchored. Same fixed points as
// the plain iteration; the averaging damps the rotation-like modes that make
// plain iterates converge only like 1/k on invariant tori.
ScalarField relax(const ScalarField& u, ScalarField w, double theta) {
  if (theta < 1.0) {
    const double wm = w.min();
    auto& out = w.values_mut();
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = (1.0 - theta) * u[k] + theta * (out[k] - wm);
  }
  anchor(w);
  return w;
}

}  // namespace

AlphaResult compute_alpha(LaxOleinik& lo, const Vec& c, const AlphaOptions& opts, const ScalarField* warm) {
  if (!(opts.relaxation > 0.0 && opts.relaxation <= 1.0)) throw ConfigError("relaxation must lie in (0, 1]");
  AlphaResult r;
  ScalarField u = warm ? *warm : ScalarField::constant(lo.geometry(), 0.0, "u");
  const double tau = lo.tau();
  for (r.iterations = 1; r.iterations <= opts.max_iter; ++r.iterations) {
    ScalarField w = lo.minus(u, c, 0.0);
    auto inc = increment(u, w);
    r.lower = std::max(r.lower, -inc.hi / tau);
    r.upper = std::min(r.upper, -inc.lo / tau);
    u = relax(u, std::move(w), opts.relaxation);
    r.tail.push_back(r.upper - r.lower);
    if (r.tail.size() > 8) r.tail.erase(r.tail.begin());
    if (r.upper - r.lower < opts.tol_alpha) {
      r.converged = true;
      break;
    }
    if (opts.threshold && (r.lower > *opts.threshold || r.upper < *opts.threshold)) {
      r.converged = true;
      break;
    }
  }
  r.iterations = std::min(r.iterations, opts.max_iter);
  r.alpha = 0.5 * (r.lower + r.upper);
  u.set_label("u");
  r.field = std::move(u);
  return r;
}

double compute_alpha(const SystemSpec& spec, const Vec& c, int grid) {
  TorusGeometry g(spec.dim(), grid > 0 ? grid : default_grid(spec.dim()));
  LaxOleinik lo(spec.with_c(c), g);
  AlphaResult r = compute_alpha(lo, c);
  if (!r.converged)
    throw ConvergenceError(fmt::format("alpha did not converge after {} sweeps: bracket [{:.9g}, {:.9g}]",
                                       r.iterations, r.lower, r.upper));
  return r.alpha;
}

WeakKamResult weak_kam_solution(LaxOleinik& lo, const Vec& c, const WeakKamOptions& opts, const ScalarField* initial) {
  if (!(opts.relaxation > 0.0 && opts.relaxation <= 1.0)) throw ConfigError("relaxation must lie in (0, 1]");
  WeakKamResult r;
  if (initial && !(initial->geometry() == lo.geometry())) throw ConfigError("initial field must live on the solver grid");
  ScalarField u = initial ? *initial : ScalarField::constant(lo.geometry(), 0.0, "u");
  const double tau = lo.tau();
  for (r.iterations = 1; r.iterations <= opts.max_iter; ++r.iterations) {
    ScalarField w = lo.minus(u, c, 0.0);
    auto inc = increment(u, w);
    r.alpha_lower = std::max(r.alpha_lower, -inc.hi / tau);
    r.alpha_upper = std::min(r.alpha_upper, -inc.lo / tau);
    r.residual = inc.hi - inc.lo;
    u = relax(u, std::move(w), opts.relaxation);
    r.residual_tail.push_back(r.residual);
    if (r.residual_tail.size() > 16) r.residual_tail.erase(r.residual_tail.begin());
    if (r.residual < opts.tol_fix && r.alpha_upper - r.alpha_lower < opts.tol_alpha) {
      r.converged = true;
      break;
    }
  }
  r.iterations = std::min(r.iterations, opts.max_iter);
  r.alpha = 0.5 * (r.alpha_lower + r.alpha_upper);
  u.set_label("u_c");
  r.u = std::move(u);
  return r;
}

WeakKamResult weak_kam_solution(const SystemSpec& spec, int grid, const WeakKamOptions& opts) {
  TorusGeometry g(spec.dim(), grid > 0 ? grid : default_grid(spec.dim()));
  LaxOleinik lo(spec, g);
  return weak_kam_solution(lo, spec.c(), opts);
}

namespace {
void check_step(const SystemSpec& spec, double t) {
  if (!(t > 0) || t > t0_estimate(spec) * (1 + 1e-12))
    throw ConfigError(fmt::format("Lax-Oleinik step {} outside (0, t0 = {}]", t, t0_estimate(spec)));
}
}  // namespace

ScalarField lax_oleinik_minus(const SystemSpec& spec, const ScalarField& u, double t, double alpha) {
  check_step(spec, t);
  LaxOleinik lo(spec, u.geometry(), t);
  return lo.minus(u, spec.c(), alpha);
}

ScalarField lax_oleinik_plus(const SystemSpec& spec, const ScalarField& u, double t, double alpha) {
  check_step(spec, t);
  LaxOleinik lo(spec, u.geometry(), t);
  return lo.plus(u, spec.c(), alpha);
}

}  // namespace wkam
