#include "wkam/conley.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace wkam {

namespace {

double max_norm(const Vec& a, const Vec& b, int dim) {
  double d = std::abs(a[0] - b[0]);
  if (dim == 2) d = std::max(d, std::abs(a[1] - b[1]));
  return d;
}

long floor_div(long a, long m) { return a >= 0 ? a / m : -((-a + m - 1) / m); }

ChainOptions resolved(const ChainOptions& in, const TorusGeometry& g) {
  ChainOptions o = in;
  if (o.periods < 1) throw ConfigError("chain window needs at least one period");
  if (o.cells_per_period <= 0) o.cells_per_period = g.dim() == 1 ? std::max(8, g.n() / 4) : std::max(8, g.n() / 2);
  const double cell = 1.0 / o.cells_per_period;
  if (o.epsilon <= 0) o.epsilon = 2.0 * cell;
  if (o.epsilon < 2.0 * cell - 1e-12) throw ConfigError("chain epsilon must be at least two cell diameters");
  if (o.T <= 0) throw ConfigError("chain time must be positive");
  return o;
}

}  // namespace

SampledFlowMap::SampledFlowMap(Semiflow& flow, const ChainOptions& in) {
  const auto& g = flow.geometry();
  const ChainOptions o = resolved(in, g);
  dim_ = g.dim();
  m_ = 2 * o.cells_per_period;
  spacing_ = 0.5 / o.cells_per_period;
  origin_ = o.origin;
  T_ = o.T;
  double tau = o.tau > 0 ? o.tau : default_flow_step(flow.analysis().system());
  tau = o.T / std::ceil(o.T / tau - 1e-9);
  const std::size_t count = dim_ == 1 ? std::size_t(m_) : std::size_t(m_) * m_;
  images_.resize(count);
  for (std::size_t k = 0; k < count; ++k) {
    const long a = long(k % m_), b = dim_ == 2 ? long(k / m_) : 0;
    const Vec x = sample(a, b);
    images_[k] = flow.flow(x, o.T, tau, o.method) - x;
  }
}

Vec SampledFlowMap::sample(long a, long b) const {
  Vec x(origin_ + a * spacing_, dim_ == 2 ? origin_ + b * spacing_ : 0.0);
  return x;
}

Vec SampledFlowMap::image(long a, long b) const {
  const long ra = a - floor_div(a, m_) * m_;
  const long rb = dim_ == 2 ? b - floor_div(b, m_) * m_ : 0;
  return sample(a, b) + images_[std::size_t(ra + rb * m_)];
}

Vec ChainGraph::center(std::size_t c) const {
  const auto ij = coords(c);
  return Vec(origin + (ij[0] + 0.5) * cell, dim == 2 ? origin + (ij[1] + 0.5) * cell : 0.0);
}

ChainGraph build_chain_graph(const SampledFlowMap& phi, const ChainOptions& in) {
  ChainGraph g;
  g.dim = phi.dim();
  g.origin = phi.origin();
  g.periods = in.periods;
  g.cells_per_period = phi.lattice_per_period() / 2;
  g.cell = 1.0 / g.cells_per_period;
  g.epsilon = in.epsilon > 0 ? in.epsilon : 2.0 * g.cell;
  g.T = phi.T();
  if (g.epsilon < 2.0 * g.cell - 1e-12) throw ConfigError("chain epsilon must be at least two cell diameters");
  const long N = g.cells_per_axis();
  const double hi = g.origin + g.periods;

  std::vector<std::map<std::size_t, double>> out(g.cell_count());
  const long ny = g.dim == 2 ? N : 1;
  for (long cj = 0; cj < ny; ++cj)
    for (long ci = 0; ci < N; ++ci) {
      const std::size_t from = g.cell_index(ci, cj);
      auto& row = out[from];
      for (long sb = 0; sb < (g.dim == 2 ? 3 : 1); ++sb)
        for (long sa = 0; sa < 3; ++sa) {
          const long a = 2 * ci + sa, b = 2 * cj + sb;
          const Vec y = phi.image(a, b);
          bool outside = y[0] < g.origin || y[0] > hi;
          if (g.dim == 2) outside = outside || y[1] < g.origin || y[1] > hi;
          // candidate cells whose centre lies within epsilon in max-norm
          auto range = [&](double t) {
            const double s = (t - g.origin) / g.cell - 0.5;
            const double r = g.epsilon / g.cell;
            return std::pair<long, long>{std::max(0L, long(std::ceil(s - r))), std::min(N - 1, long(std::floor(s + r)))};
          };
          const auto rx = range(y[0]);
          const auto ry = g.dim == 2 ? range(y[1]) : std::pair<long, long>{0, 0};
          bool landed = false;
          for (long j = ry.first; j <= ry.second; ++j)
            for (long i = rx.first; i <= rx.second; ++i) {
              const std::size_t to = g.cell_index(i, j);
              const double d = max_norm(y, g.center(to), g.dim);
              if (d >= g.epsilon) continue;
              landed = true;
              auto it = row.find(to);
              if (it == row.end() || d < it->second) row[to] = d;
            }
          if (outside || !landed) {
            auto it = row.find(g.outflow());
            if (it == row.end()) row[g.outflow()] = INFINITY;
          }
        }
    }
  for (std::size_t i = 0; i < out.size(); ++i)
    for (const auto& [j, d] : out[i]) g.edges.push_back({i, j, d});
  return g;
}

ChainGraph build_chain_graph(Semiflow& flow, const ChainOptions& opts) {
  const ChainOptions o = resolved(opts, flow.geometry());
  return build_chain_graph(SampledFlowMap(flow, o), o);
}

std::vector<std::size_t> chain_recurrent_set(const ChainGraph& g) {
  const std::size_t n = g.cell_count() + 1;
  std::vector<std::size_t> start(n + 1, 0);
  for (const auto& e : g.edges) ++start[e.from + 1];
  for (std::size_t i = 0; i < n; ++i) start[i + 1] += start[i];
  std::vector<std::size_t> adj(g.edges.size()), fill(start.begin(), start.end() - 1);
  std::vector<char> self(n, 0);
  for (const auto& e : g.edges) {
    adj[fill[e.from]++] = e.to;
    if (e.from == e.to) self[e.from] = 1;
  }

  // iterative Tarjan
  constexpr std::size_t unvisited = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> index(n, unvisited), low(n, 0), comp_size(n, 0), comp(n, unvisited);
  std::vector<char> on_stack(n, 0);
  std::vector<std::size_t> stack, call;
  std::vector<std::size_t> next_edge(n, 0);
  std::size_t counter = 0, ncomp = 0;
  for (std::size_t root = 0; root < n; ++root) {
    if (index[root] != unvisited) continue;
    call.push_back(root);
    index[root] = low[root] = counter++;
    next_edge[root] = start[root];
    stack.push_back(root);
    on_stack[root] = 1;
    while (!call.empty()) {
      const std::size_t v = call.back();
      if (next_edge[v] < start[v + 1]) {
        const std::size_t w = adj[next_edge[v]++];
        if (index[w] == unvisited) {
          index[w] = low[w] = counter++;
          next_edge[w] = start[w];
          stack.push_back(w);
          on_stack[w] = 1;
          call.push_back(w);
        } else if (on_stack[w]) {
          low[v] = std::min(low[v], index[w]);
        }
        continue;
      }
      call.pop_back();
      if (!call.empty()) low[call.back()] = std::min(low[call.back()], low[v]);
      if (low[v] == index[v]) {
        std::size_t w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = 0;
          comp[w] = ncomp;
          ++comp_size[ncomp];
        } while (w != v);
        ++ncomp;
      }
    }
  }
  std::vector<std::size_t> cr;
  for (std::size_t v = 0; v < g.cell_count(); ++v)
    if (self[v] || comp_size[comp[v]] > 1) cr.push_back(v);
  return cr;
}

std::vector<std::size_t> fixed_point_cells(const SampledFlowMap& phi, const ChainGraph& g, double tol) {
  std::vector<std::size_t> cells;
  const long N = g.cells_per_axis(), ny = g.dim == 2 ? N : 1;
  for (long cj = 0; cj < ny; ++cj)
    for (long ci = 0; ci < N; ++ci) {
      bool fixed = false;
      for (long sb = 0; sb < (g.dim == 2 ? 3 : 1) && !fixed; ++sb)
        for (long sa = 0; sa < 3 && !fixed; ++sa) {
          const long a = 2 * ci + sa, b = 2 * cj + sb;
          fixed = (phi.image(a, b) - phi.sample(a, b)).norm() <= tol;
        }
      if (fixed) cells.push_back(g.cell_index(ci, cj));
    }
  return cells;
}

std::vector<std::size_t> cells_containing(const ChainGraph& g, const std::vector<Vec>& torus_points) {
  const long N = g.cells_per_axis();
  const double eps = 1e-9 * g.cell;
  auto axis_cells = [&](double t) {
    std::vector<long> out;
    for (long k = long(std::floor(g.origin)) - 1; k <= long(std::ceil(g.origin + g.periods)) + 1; ++k) {
      const double s = (t + k - g.origin) / g.cell;
      const long lo = long(std::floor(s - eps)), hi = long(std::floor(s + eps));
      for (long i = lo; i <= hi; ++i)
        if (i >= 0 && i < N) out.push_back(i);
      // a point on a cell edge belongs to the cell below as well
      const long edge = long(std::llround(s));
      if (std::abs(s - edge) <= eps && edge - 1 >= 0 && edge - 1 < N) out.push_back(edge - 1);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  };
  std::vector<std::size_t> cells;
  for (const auto& p : torus_points) {
    const auto xs = axis_cells(p[0]);
    const auto ys = g.dim == 2 ? axis_cells(p[1]) : std::vector<long>{0};
    for (long j : ys)
      for (long i : xs) cells.push_back(g.cell_index(i, j));
  }
  std::sort(cells.begin(), cells.end());
  cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
  return cells;
}

double cell_hausdorff(const ChainGraph& g, const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
  if (a.empty() && b.empty()) return 0.0;
  if (a.empty() || b.empty()) return INFINITY;
  auto directed = [&](const std::vector<std::size_t>& from, const std::vector<std::size_t>& to) {
    double worst = 0;
    for (auto p : from) {
      const auto pi = g.coords(p);
      double best = INFINITY;
      for (auto q : to) {
        const auto qi = g.coords(q);
        best = std::min(best, double(std::max(std::abs(pi[0] - qi[0]), std::abs(pi[1] - qi[1]))));
        if (best == 0) break;
      }
      worst = std::max(worst, best);
    }
    return worst;
  };
  return std::max(directed(a, b), directed(b, a));
}

PreattractorVerdict preattractor_check(Semiflow& flow, double r, const std::vector<double>& times,
                                       const ChainOptions& in) {
  const auto& g = flow.geometry();
  const ChainOptions o = resolved(in, g);
  const double h = g.h();
  const double lo = o.origin, hi = o.origin + o.periods;

  // Boundary-adjacent samples: nodes of the closure of {v > r} next to {v < r},
  // plus linear crossing points on lattice edges.
  std::vector<Vec> samples;
  const long N = long(std::llround(o.periods / h));
  const long ny = g.dim() == 2 ? N : 0;
  auto node = [&](long i, long j) { return Vec(lo + i * h, g.dim() == 2 ? lo + j * h : 0.0); };
  for (long j = 0; j <= ny; ++j)
    for (long i = 0; i <= N; ++i) {
      const Vec x = node(i, j);
      const double vx = flow.v(x);
      const int dirs = g.dim() == 2 ? 2 : 1;
      for (int d = 0; d < dirs; ++d) {
        const Vec y = d == 0 ? node(i + 1, j) : node(i, j + 1);
        if (y[0] > hi + 1e-12 || (g.dim() == 2 && y[1] > hi + 1e-12)) continue;
        const double vy = flow.v(y);
        if ((vx - r) * (vy - r) < 0) samples.push_back(x + (y - x) * ((r - vx) / (vy - vx)));
      }
      if (vx >= r) {
        bool touches = false;
        for (int d = 0; d < 2 * (g.dim() == 2 ? 2 : 1); ++d) {
          const long di = d == 0 ? 1 : d == 1 ? -1 : 0, dj = d == 2 ? 1 : d == 3 ? -1 : 0;
          touches = touches || flow.v(node(i + di, j + dj)) < r;
        }
        if (touches) samples.push_back(x);
      }
    }

  PreattractorVerdict out;
  out.samples = samples.size();
  if (samples.empty()) {
    out.pass = true;
    return out;
  }
  double tau = o.tau > 0 ? o.tau : default_flow_step(flow.analysis().system());
  for (double t : times) {
    if (t <= 0) throw ConfigError("preattractor times must be positive");
    const double step = t / std::ceil(t / tau - 1e-9);
    for (const auto& x : samples) {
      const Vec y = flow.flow(x, t, step, o.method);
      const double margin = flow.v(y) - r;
      out.worst_margin = std::min(out.worst_margin, margin);
      if ((y - x).norm() <= flow.cluster_tol()) out.boundary_fixed_point = true;
    }
  }
  out.pass = !out.boundary_fixed_point && out.worst_margin > 0;
  return out;
}

std::vector<CriticalValue> critical_values_histogram(const SuperdiffAnalysis& sd, double resolution) {
  std::vector<double> vals;
  const Vec c = sd.system().c();
  for (const auto& x : sd.critical_points()) vals.push_back(c.dot(x) + sd.field()(x));
  std::sort(vals.begin(), vals.end());
  std::vector<CriticalValue> out;
  for (double v : vals) {
    if (!out.empty() && v - out.back().value <= resolution)
      ++out.back().multiplicity;
    else
      out.push_back({v, 1});
  }
  return out;
}

}  // namespace wkam
