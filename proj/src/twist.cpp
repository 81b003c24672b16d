#include "wkam/twist.hpp"

#include "wkam/superdiff.hpp"

#include <Eigen/Cholesky>
#include <fmt/format.h>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>

namespace wkam {

namespace {

constexpr double two_pi = 2.0 * M_PI;

// Catmull-Rom weights and their first two derivatives at t in [0, 1].
void cr_weights(double t, double w[4], double dw[4], double ddw[4]) {
  const double t2 = t * t, t3 = t2 * t;
  w[0] = 0.5 * (-t3 + 2 * t2 - t);
  w[1] = 0.5 * (3 * t3 - 5 * t2 + 2);
  w[2] = 0.5 * (-3 * t3 + 4 * t2 + t);
  w[3] = 0.5 * (t3 - t2);
  dw[0] = 0.5 * (-3 * t2 + 4 * t - 1);
  dw[1] = 0.5 * (9 * t2 - 10 * t);
  dw[2] = 0.5 * (-9 * t2 + 8 * t + 1);
  dw[3] = 0.5 * (3 * t2 - 2 * t);
  ddw[0] = 0.5 * (-6 * t + 4);
  ddw[1] = 0.5 * (18 * t - 10);
  ddw[2] = 0.5 * (-18 * t + 8);
  ddw[3] = 0.5 * (6 * t - 2);
}

}  // namespace

class DistanceGraph {
 public:
  DistanceGraph(const SystemSpec& spec, int n, double width, int sources);

  GeneratingFunction::Jet jet(double x, double y) const;
  std::vector<Vec> path(double x, double y) const;
  double width() const { return width_; }

 private:
  std::size_t strip_index(int i, int r) const { return std::size_t(i) * std::size_t(2 * R_ + 1) + std::size_t(r + R_); }
  std::vector<double> distances(int source_row, std::vector<int>* pred) const;

  int n_, R_, W_, sources_;
  double width_;
  std::vector<std::array<int, 2>> offsets_;
  std::vector<double> weights_;  // torus node x offset
  std::vector<double> table_;    // sources x (2W + 1)
};

DistanceGraph::DistanceGraph(const SystemSpec& spec, int n, double width, int sources)
    : n_(n), width_(width) {
  if (spec.dim() != 2) throw ConfigError("distance generating function needs a 2D system");
  if (n < 16) throw ConfigError("distance generating function resolution must be at least 16");
  if (width <= 0) throw ConfigError("generating function width must be positive");
  sources_ = sources > 0 ? sources : std::min(n, 64);
  if (n % sources_ != 0) throw ConfigError("source count must divide the resolution");
  W_ = int(std::ceil(width * n));
  R_ = W_ + n / 2;
  constexpr int reach = 4;
  for (int b = -reach; b <= reach; ++b)
    for (int a = -reach; a <= reach; ++a)
      if ((a || b) && std::gcd(std::abs(a), std::abs(b)) == 1) offsets_.push_back({a, b});

  const double h = 1.0 / n;
  const int m = 2 * n;
  std::vector<Mat> half(std::size_t(m) * m);
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < m; ++i) {
      const Mat G = spec.metric(Vec(0.5 * i * h, 0.5 * j * h));
      if (G.determinant() <= 0 || G(0, 0) <= 0) throw ConfigError("metric must be positive definite");
      half[std::size_t(i) + std::size_t(j) * m] = G;
    }
  auto at = [&](long i, long j) -> const Mat& {
    i = ((i % m) + m) % m;
    j = ((j % m) + m) % m;
    return half[std::size_t(i) + std::size_t(j) * m];
  };
  const std::size_t K = offsets_.size();
  weights_.resize(std::size_t(n) * n * K);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i)
      for (std::size_t k = 0; k < K; ++k) {
        const auto [a, b] = offsets_[k];
        const Vec d(a * h, b * h);
        auto len = [&](const Mat& G) { return std::sqrt(d.dot(G * d)); };
        weights_[(std::size_t(i) + std::size_t(j) * n) * K + k] =
            (len(at(2 * i, 2 * j)) + 4 * len(at(2 * i + a, 2 * j + b)) + len(at(2 * i + 2 * a, 2 * j + 2 * b))) / 6.0;
      }

  table_.resize(std::size_t(sources_) * (2 * W_ + 1));
  for (int s = 0; s < sources_; ++s) {
    const auto dist = distances(s * (n / sources_), nullptr);
    for (int w = -W_; w <= W_; ++w) {
      const double v = dist[strip_index(n, w)];
      if (!std::isfinite(v)) throw ConfigError("distance graph is disconnected");
      table_[std::size_t(s) * (2 * W_ + 1) + std::size_t(w + W_)] = v;
    }
  }
}

std::vector<double> DistanceGraph::distances(int source_row, std::vector<int>* pred) const {
  const std::size_t total = std::size_t(n_ + 1) * std::size_t(2 * R_ + 1);
  const std::size_t K = offsets_.size();
  std::vector<double> dist(total, INFINITY);
  if (pred) pred->assign(total, -1);
  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  const std::size_t start = strip_index(0, 0);
  dist[start] = 0;
  heap.push({0.0, start});
  const int rows = 2 * R_ + 1;
  while (!heap.empty()) {
    const auto [d, v] = heap.top();
    heap.pop();
    if (d > dist[v]) continue;
    const int i = int(v / std::size_t(rows)), r = int(v % std::size_t(rows)) - R_;
    const int ti = i % n_, tj = (((source_row + r) % n_) + n_) % n_;
    const double* w = weights_.data() + (std::size_t(ti) + std::size_t(tj) * n_) * K;
    for (std::size_t k = 0; k < K; ++k) {
      const int i2 = i + offsets_[k][0], r2 = r + offsets_[k][1];
      if (i2 < 0 || i2 > n_ || r2 < -R_ || r2 > R_) continue;
      const std::size_t u = strip_index(i2, r2);
      const double nd = d + w[k];
      if (nd < dist[u]) {
        dist[u] = nd;
        if (pred) (*pred)[u] = int(v);
        heap.push({nd, u});
      }
    }
  }
  return dist;
}

GeneratingFunction::Jet DistanceGraph::jet(double x, double y) const {
  const double n = n_, S = sources_;
  const double u = wrap_unit(x) * S;
  double d = (y - x) * n + W_;
  // beyond the table: continue linearly from the last interior point
  const double dc = std::clamp(d, 1.0, 2.0 * W_ - 1.0);
  const long i0 = long(std::floor(u));
  long k0 = std::min(long(std::floor(dc)), long(2 * W_ - 2));
  const double tu = u - double(i0), td = dc - double(k0);
  double wu[4], dwu[4], ddwu[4], wd[4], dwd[4], ddwd[4];
  cr_weights(tu, wu, dwu, ddwu);
  cr_weights(td, wd, dwd, ddwd);
  double H = 0, Hu = 0, Hd = 0, Huu = 0, Hud = 0, Hdd = 0;
  for (int a = 0; a < 4; ++a) {
    const long s = ((i0 - 1 + a) % sources_ + sources_) % sources_;
    for (int b = 0; b < 4; ++b) {
      const long k = std::clamp(k0 - 1 + b, 0L, long(2 * W_));
      const double t = table_[std::size_t(s) * (2 * W_ + 1) + std::size_t(k)];
      H += wu[a] * wd[b] * t;
      Hu += dwu[a] * wd[b] * t;
      Hd += wu[a] * dwd[b] * t;
      Huu += ddwu[a] * wd[b] * t;
      Hud += dwu[a] * dwd[b] * t;
      Hdd += wu[a] * ddwd[b] * t;
    }
  }
  if (d != dc) {
    H += (d - dc) * Hd;
    Hdd = 0;
  }
  GeneratingFunction::Jet j;
  j.value = H;
  j.d1 = S * Hu - n * Hd;
  j.d2 = n * Hd;
  j.d11 = S * S * Huu - 2 * S * n * Hud + n * n * Hdd;
  j.d12 = S * n * Hud - n * n * Hdd;
  j.d22 = n * n * Hdd;
  return j;
}

std::vector<Vec> DistanceGraph::path(double x, double y) const {
  const int src = int(std::lround(wrap_unit(x) * n_)) % n_;
  const double base = std::floor(x) + double(src) / n_;
  const int target = std::clamp(int(std::lround((y - base) * n_)), -R_, R_);
  std::vector<int> pred;
  distances(src, &pred);
  std::vector<Vec> pts;
  int v = int(strip_index(n_, target));
  const int rows = 2 * R_ + 1;
  while (v >= 0) {
    const int i = v / rows, r = v % rows - R_;
    pts.push_back(Vec(wrap_unit(double(i) / n_), wrap_unit(base + double(r) / n_)));
    v = pred[std::size_t(v)];
  }
  std::reverse(pts.begin(), pts.end());
  return pts;
}

std::string to_string(GeneratingKind k) { return k == GeneratingKind::analytic ? "analytic" : "distance-grid"; }

GeneratingFunction GeneratingFunction::standard_map(double k) {
  GeneratingFunction g;
  g.kind_ = GeneratingKind::analytic;
  g.params_ = {k};
  return g;
}

GeneratingFunction::Jet GeneratingFunction::jet(double x, double y) const {
  if (kind_ == GeneratingKind::distance_grid) return graph_->jet(x, y);
  const double k = params_[0], d = y - x;
  const double s = std::sin(two_pi * x), c = std::cos(two_pi * x);
  Jet j;
  j.value = 0.5 * d * d + k / (two_pi * two_pi) * c;
  j.d1 = -d - k / two_pi * s;
  j.d2 = d;
  j.d11 = 1.0 - k * c;
  j.d12 = -1.0;
  j.d22 = 1.0;
  return j;
}

double GeneratingFunction::width() const { return graph_ ? graph_->width() : INFINITY; }

GeneratingFunction distance_generating_function(const SystemSpec& spec2d, int resolution, double width, int sources) {
  GeneratingFunction g;
  g.kind_ = GeneratingKind::distance_grid;
  g.graph_ = std::make_shared<const DistanceGraph>(spec2d, resolution, width, sources);
  g.params_ = {double(resolution), width};
  return g;
}

std::vector<Vec> grid_geodesic(const GeneratingFunction& h, double x, double y) {
  if (!h.graph()) throw ConfigError("grid geodesics need a distance generating function");
  return h.graph()->path(x, y);
}

double el_defect(const GeneratingFunction& h, double prev, double cur, double next) {
  return h.jet(prev, cur).d2 + h.jet(cur, next).d1;
}

double configuration_residual(const GeneratingFunction& h, const Configuration& cfg) {
  double r = 0;
  for (long i = cfg.first + 1; i < cfg.last(); ++i)
    r = std::max(r, std::abs(el_defect(h, cfg.at(i - 1), cfg.at(i), cfg.at(i + 1))));
  return r;
}

namespace {

// A chain of q steps: periodic (x_q = x_0 + p) or with fixed ends a, b.
struct Chain {
  const GeneratingFunction& h;
  long q;
  bool periodic;
  long p = 0;
  double a = 0, b = 0;

  int vars() const { return int(periodic ? q : q - 1); }
  double point(const std::vector<double>& z, long k, int& var) const {
    if (periodic) {
      var = int(k % q);
      return z[std::size_t(var)] + (k == q ? double(p) : 0.0);
    }
    var = -1;
    if (k == 0) return a;
    if (k == q) return b;
    var = int(k - 1);
    return z[std::size_t(var)];
  }
  double action(const std::vector<double>& z) const {
    double s = 0;
    int va, vb;
    for (long i = 0; i < q; ++i) s += h(point(z, i, va), point(z, i + 1, vb));
    return s;
  }
  void derivatives(const std::vector<double>& z, Eigen::VectorXd& g, Eigen::MatrixXd* H) const {
    const int n = vars();
    g = Eigen::VectorXd::Zero(n);
    if (H) *H = Eigen::MatrixXd::Zero(n, n);
    for (long i = 0; i < q; ++i) {
      int va, vb;
      const double xa = point(z, i, va), xb = point(z, i + 1, vb);
      const auto j = h.jet(xa, xb);
      if (va >= 0) g[va] += j.d1;
      if (vb >= 0) g[vb] += j.d2;
      if (!H) continue;
      if (va >= 0) (*H)(va, va) += j.d11;
      if (vb >= 0) (*H)(vb, vb) += j.d22;
      if (va >= 0 && vb >= 0) {
        (*H)(va, vb) += j.d12;
        (*H)(vb, va) += j.d12;
      }
    }
  }
  // Terms touching variable v.
  double local(const std::vector<double>& z, int v) const {
    const long k = periodic ? v : v + 1;
    int va, vb;
    if (periodic && q == 1) return h(point(z, 0, va), point(z, 1, vb));
    const long prev = periodic ? (k == 0 ? q - 1 : k - 1) : k - 1;
    return h(point(z, prev, va), point(z, prev + 1, vb)) + h(point(z, k, va), point(z, k + 1, vb));
  }
};

double minimize_coordinate(const Chain& ch, std::vector<double>& z, int v, double radius) {
  const double s0 = z[std::size_t(v)];
  auto phi = [&](double s) {
    z[std::size_t(v)] = s;
    return ch.local(z, v);
  };
  double best = s0, fbest = phi(s0);
  constexpr int scan = 8;
  for (int t = -scan; t <= scan; ++t) {
    const double s = s0 + radius * t / scan;
    const double f = phi(s);
    if (f < fbest) fbest = f, best = s;
  }
  // golden section on the bracketing scan interval
  double lo = best - radius / scan, hi = best + radius / scan;
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = hi - gr * (hi - lo), d = lo + gr * (hi - lo);
  double fc = phi(c), fd = phi(d);
  while (hi - lo > 1e-13 * std::max(1.0, std::abs(best))) {
    if (fc < fd) {
      hi = d, d = c, fd = fc;
      c = hi - gr * (hi - lo);
      fc = phi(c);
    } else {
      lo = c, c = d, fc = fd;
      d = lo + gr * (hi - lo);
      fd = phi(d);
    }
  }
  const double s = 0.5 * (lo + hi);
  const double fs = phi(s);
  z[std::size_t(v)] = fs <= fbest ? s : best;
  return std::abs(z[std::size_t(v)] - s0);
}

struct Solved {
  std::vector<double> z;
  double action;
  double grad;
};

Solved solve_chain(const Chain& ch, std::vector<double> z, const ConfigOptions& opts) {
  const int n = ch.vars();
  if (n > 0) {
    const double spacing = std::max(1.0, std::abs(ch.periodic ? double(ch.p) : ch.b - ch.a)) / double(ch.q);
    for (int sweep = 0; sweep < opts.max_sweeps; ++sweep) {
      double moved = 0;
      for (int v = 0; v < n; ++v) moved = std::max(moved, minimize_coordinate(ch, z, v, spacing));
      if (moved < 1e-7 * spacing) break;
    }
    // Newton polish with a Levenberg shift and backtracking on the action.
    Eigen::VectorXd g;
    Eigen::MatrixXd H;
    double f = ch.action(z);
    for (int it = 0; it < opts.max_newton; ++it) {
      ch.derivatives(z, g, &H);
      if (g.lpNorm<Eigen::Infinity>() < opts.tol) break;
      double shift = 0;
      Eigen::VectorXd step;
      for (int tries = 0; tries < 20; ++tries) {
        Eigen::LLT<Eigen::MatrixXd> llt(H + shift * Eigen::MatrixXd::Identity(n, n));
        if (llt.info() == Eigen::Success) {
          step = -llt.solve(g);
          break;
        }
        shift = shift == 0 ? 1e-8 * (1 + H.diagonal().cwiseAbs().maxCoeff()) : shift * 10;
      }
      if (step.size() == 0) break;
      double t = 1;
      bool accepted = false;
      for (int ls = 0; ls < 30; ++ls, t *= 0.5) {
        std::vector<double> trial = z;
        for (int v = 0; v < n; ++v) trial[std::size_t(v)] += t * step[v];
        const double ft = ch.action(trial);
        if (ft <= f + 1e-4 * t * g.dot(step) || (ls > 0 && std::abs(ft - f) < 1e-15 * std::max(1.0, std::abs(f)))) {
          z = std::move(trial);
          f = ft;
          accepted = true;
          break;
        }
      }
      if (!accepted) break;
    }
  }
  Eigen::VectorXd g;
  ch.derivatives(z, g, nullptr);
  return {z, ch.action(z), n > 0 ? g.lpNorm<Eigen::Infinity>() : 0.0};
}

}  // namespace

Configuration minimal_periodic_config(const GeneratingFunction& h, long p, long q, const ConfigOptions& opts) {
  if (q < 1) throw ConfigError("period q must be at least 1");
  const long gd = std::gcd(std::abs(p), q);
  p /= gd;
  q /= gd;
  Chain ch{h, q, true, p};
  Solved best{{}, INFINITY, INFINITY};
  for (int s = 0; s < std::max(1, opts.starts); ++s) {
    std::vector<double> z(static_cast<std::size_t>(q));
    const double offset = double(s) / (std::max(1, opts.starts) * double(q));
    for (long i = 0; i < q; ++i) z[std::size_t(i)] = offset + double(i * p) / double(q);
    auto r = solve_chain(ch, std::move(z), opts);
    if (r.action < best.action - 1e-12) best = std::move(r);
  }
  Configuration cfg;
  cfg.p = p;
  cfg.q = q;
  cfg.action = best.action;
  const long m = std::max(q, 8L);
  cfg.first = -m;
  for (long i = -m; i <= m; ++i) {
    const long k = ((i % q) + q) % q;
    const long wraps = (i - k) / q;
    cfg.x.push_back(best.z[std::size_t(k)] + double(wraps * p));
  }
  cfg.residual = configuration_residual(h, cfg);
  cfg.stagnated = cfg.residual > std::max(opts.tol, 1e-8) * 100;
  return cfg;
}

Configuration minimal_segment(const GeneratingFunction& h, double a, double b, long q, const ConfigOptions& opts,
                              const std::vector<double>* guess) {
  if (q < 1) throw ConfigError("segment length must be at least 1");
  if (guess && long(guess->size()) != q - 1) throw ConfigError("segment guess needs q - 1 interior points");
  Chain ch{h, q, false, 0, a, b};
  std::vector<double> z;
  for (long k = 1; k < q; ++k) z.push_back(a + (b - a) * double(k) / double(q));
  auto r = solve_chain(ch, std::move(z), opts);
  if (guess) {
    auto rg = solve_chain(ch, *guess, opts);
    if (rg.action < r.action) r = std::move(rg);
  }
  Configuration cfg;
  cfg.first = 0;
  cfg.x.push_back(a);
  cfg.x.insert(cfg.x.end(), r.z.begin(), r.z.end());
  cfg.x.push_back(b);
  cfg.action = r.action;
  cfg.residual = configuration_residual(h, cfg);
  cfg.stagnated = cfg.residual > std::max(opts.tol, 1e-8) * 100;
  return cfg;
}

double rotation_number(const Configuration& cfg) {
  const std::size_t n = cfg.x.size();
  if (n < 2) throw ConfigError("rotation number needs at least two points");
  double mi = 0, mx = 0;
  for (std::size_t k = 0; k < n; ++k) mi += double(cfg.first + long(k)), mx += cfg.x[k];
  mi /= double(n);
  mx /= double(n);
  double sxy = 0, sxx = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const double di = double(cfg.first + long(k)) - mi;
    sxy += di * (cfg.x[k] - mx);
    sxx += di * di;
  }
  return sxy / sxx;
}

std::vector<std::pair<long, long>> convergents(double omega, long max_q) {
  std::vector<std::pair<long, long>> out;
  long p0 = 1, q0 = 0, p1 = long(std::floor(omega)), q1 = 1;
  double r = omega - std::floor(omega);
  out.push_back({p1, q1});
  while (r > 1e-12) {
    const double inv = 1.0 / r;
    const long a = long(std::floor(inv + 1e-12));
    r = inv - double(a);
    if (r < 0) r = 0;
    const long p2 = a * p1 + p0, q2 = a * q1 + q0;
    if (q2 > max_q) break;
    out.push_back({p2, q2});
    p0 = p1, q0 = q1, p1 = p2, q1 = q2;
  }
  return out;
}

namespace {
std::pair<long, long> proxy_fraction(double omega, long min_q) {
  for (auto [p, q] : convergents(omega, 1L << 30))
    if (q >= min_q) return {p, q};
  // omega is (numerically) rational with a small denominator: use a multiple
  auto last = convergents(omega, 1L << 30).back();
  const long m = (min_q + last.second - 1) / last.second;
  return {last.first * m, last.second * m};
}
}  // namespace

namespace {
// Points of one period of the orbit reduced mod 1, sorted.
std::vector<double> orbit_circle(const Configuration& orbit) {
  std::vector<double> pts;
  for (long i = 0; i < orbit.q; ++i) pts.push_back(wrap_unit(orbit.at(i)));
  std::sort(pts.begin(), pts.end());
  return pts;
}
}  // namespace

Gap minimal_gap(const GeneratingFunction& h, double omega, double x) {
  const auto [p, q] = proxy_fraction(omega, 50);
  const auto pts = orbit_circle(minimal_periodic_config(h, p, q));
  const double base = std::floor(x), r = x - base;
  auto it = std::upper_bound(pts.begin(), pts.end(), r);
  const double lo = it == pts.begin() ? pts.back() - 1.0 : *std::prev(it);
  const double hi = it == pts.end() ? pts.front() + 1.0 : *it;
  return {base + lo, base + hi};
}

std::vector<Gap> gap_sequence(const GeneratingFunction& h, double omega, double x0, double y0, int iterations) {
  if (!(y0 > x0)) throw ConfigError("gap interval needs x0 < y0");
  const auto [p, q] = proxy_fraction(omega, 50);
  const auto orbit = minimal_periodic_config(h, p, q);
  // The endpoints must lie on neighbouring minimal configurations: no orbit point strictly inside.
  const double margin = 1e-9;
  for (double c : orbit_circle(orbit)) {
    const double d = c - x0 - std::floor(c - x0);
    if (d > margin && d < y0 - x0 - margin)
      throw ConfigError(fmt::format("interval ({}, {}) contains the orbit point {}; use a gap of the minimal set", x0,
                                    y0, c));
  }
  // Seed each segment with the periodic minimizer translated onto its endpoint.
  auto seeded = [&](double e) {
    long j = 0;
    double best = INFINITY;
    for (long i = 0; i < orbit.q; ++i) {
      const double d = std::abs(periodic_delta(orbit.at(i) - e));
      if (d < best) best = d, j = i;
    }
    const double shift = e - orbit.at(j);
    std::vector<double> guess;
    for (long k = 1; k < q; ++k) {
      const long i = j + k;
      guess.push_back(orbit.at(i % orbit.q) + double((i / orbit.q) * orbit.p) + shift);
    }
    return minimal_segment(h, e, e + double(p), q, {}, &guess);
  };
  const auto lower = seeded(x0);
  const auto upper = seeded(y0);
  std::vector<Gap> out;
  for (int i = 0; i < iterations; ++i) {
    const long k = i % q, wraps = i / q;
    Gap g{lower.at(k) + double(wraps * p), upper.at(k) + double(wraps * p)};
    if (g.width() < 1e-12) break;
    out.push_back(g);
  }
  return out;
}

double gap_overlap(const std::vector<Gap>& gaps, std::size_t count) {
  std::vector<std::pair<double, double>> iv;
  for (std::size_t i = 0; i < std::min(count, gaps.size()); ++i) {
    const double w = gaps[i].width();
    if (w >= 1.0) return w - 1.0;
    const double s = wrap_unit(gaps[i].x), e = s + w;
    if (e <= 1.0) {
      iv.push_back({s, e});
    } else {
      iv.push_back({s, 1.0});
      iv.push_back({0.0, e - 1.0});
    }
  }
  std::sort(iv.begin(), iv.end());
  double overlap = 0, reach = -INFINITY;
  for (const auto& [s, e] : iv) {
    if (s < reach) overlap += std::min(reach, e) - s;
    reach = std::max(reach, e);
  }
  return overlap;
}

double stable_norm(const GeneratingFunction& h, long p, long q) {
  const auto cfg = minimal_periodic_config(h, p, q);
  return cfg.action / double(cfg.q);
}

Vec dual_cohomology(const GeneratingFunction& h, double omega, long min_q) {
  const auto cs = convergents(omega, 1L << 30);
  std::size_t k = 0;
  while (k + 1 < cs.size() && cs[k].second < min_q) ++k;
  if (k == 0 || k + 1 >= cs.size()) throw ConfigError("omega needs convergents on both sides of the proxy");
  const auto [p, q] = cs[k];
  const double rho = double(p) / double(q);
  const double rm = double(cs[k - 1].first) / double(cs[k - 1].second);
  const double rp = double(cs[k + 1].first) / double(cs[k + 1].second);
  const double N = stable_norm(h, p, q);
  const double dN = (stable_norm(h, cs[k + 1].first, cs[k + 1].second) - stable_norm(h, cs[k - 1].first, cs[k - 1].second)) / (rp - rm);
  return N * Vec(N - rho * dN, dN);
}

SingNearReport sing_near_aubry_check(const SystemSpec& spec, double epsilon, const SingNearOptions& opts) {
  if (spec.dim() != 2) throw ConfigError("singularity check needs a 2D system");
  if (spec.growth().potential_oscillation > 1e-12) throw ConfigError("singularity check needs a geodesic system (V = 0)");
  if (!(epsilon > 0)) throw ConfigError("epsilon must be positive");
  SingNearReport rep;
  rep.epsilon = epsilon;
  const auto gf = distance_generating_function(spec, opts.gf_resolution);
  const auto [p, q] = proxy_fraction(opts.omega, opts.min_q);
  rep.p = p;
  rep.q = q;
  rep.c = opts.c ? *opts.c : dual_cohomology(gf, opts.omega, opts.min_q);

  // coarse solve, then refine from its interpolant
  TorusGeometry coarse(2, std::max(16, opts.grid / 2)), fine(2, opts.grid);
  LaxOleinik lo_coarse(spec, coarse);
  WeakKamOptions wc = opts.weak_kam;
  wc.max_iter = opts.max_iter_coarse;
  const auto rc = weak_kam_solution(lo_coarse, rep.c, wc);
  const ScalarField start = ScalarField::sample(fine, [&](const Vec& x) { return rc.u(x); }, "u");
  LaxOleinik lo(spec, fine);
  const auto r = weak_kam_solution(lo, rep.c, opts.weak_kam, &start);
  rep.alpha = r.alpha;
  rep.weak_kam_converged = r.converged;
  rep.iterations = rc.iterations + r.iterations;

  SuperdiffAnalysis sd(r.u, spec.with_c(rep.c));
  rep.singular_nodes = sd.singular_count();

  const auto cfg = minimal_periodic_config(gf, p, q);
  for (long i = 0; i < cfg.q; ++i) {
    const auto seg = grid_geodesic(gf, cfg.at(i), cfg.at(i + 1));
    rep.proxy.insert(rep.proxy.end(), seg.begin(), seg.end());
  }
  // Re-apply the configuration recursion to the section points. The tabulated
  // h can be flat in y (d12 = 0 over an interval), so the next point is any root
  // of the recursion; scan for roots and keep the one nearest the section.
  std::vector<double> section;
  for (long i = 0; i < cfg.q; ++i) section.push_back(wrap_unit(cfg.at(i)));
  auto to_section = [&](double s) {
    double best = INFINITY;
    for (double t : section) best = std::min(best, std::abs(periodic_delta(wrap_unit(s) - t)));
    return best;
  };
  const double step = double(p) / double(q);
  for (long i = 0; i < cfg.q; ++i) {
    const double a = cfg.at(i - 1), b = cfg.at(i);
    const double back = gf.jet(a, b).d2;
    auto f = [&](double s) { return back + gf.jet(b, s).d1; };
    const int samples = 2000;
    const double lo = b + step - 0.5, hi = b + step + 0.5;
    double best = INFINITY, prev_s = lo, prev_f = f(lo);
    for (int k = 1; k <= samples; ++k) {
      const double s = lo + (hi - lo) * k / samples, fs = f(s);
      if (std::abs(fs) < 1e-9) best = std::min(best, to_section(s));
      if ((prev_f < 0) != (fs < 0)) {
        double l = prev_s, r = s, fl = prev_f;
        for (int it = 0; it < 60; ++it) {
          const double m = 0.5 * (l + r), fm = f(m);
          if ((fl < 0) == (fm < 0)) l = m, fl = fm;
          else r = m;
        }
        best = std::min(best, to_section(0.5 * (l + r)));
      }
      prev_s = s, prev_f = fs;
    }
    rep.proxy_invariance = std::max(rep.proxy_invariance, best);
  }

  if (rep.singular_nodes == 0) {
    rep.vacuous = true;
    return rep;
  }
  const auto& g = r.u.geometry();
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (!sd.singular(k)) continue;
    const Vec x = g.node(k);
    for (const auto& y : rep.proxy) rep.distance = std::min(rep.distance, g.distance(x, y));
  }
  rep.pass = rep.distance <= epsilon;
  return rep;
}

}  // namespace wkam
