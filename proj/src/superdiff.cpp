#include "wkam/superdiff.hpp"

#include "wkam/error.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>

namespace wkam {

namespace {

double cross(const Vec& o, const Vec& a, const Vec& b) {
  return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
}

Vec nearest_on_segment(const Vec& a, const Vec& b, const Vec& q) {
  Vec d = b - a;
  double L = d.squaredNorm();
  if (L == 0) return a;
  double s = std::clamp((q - a).dot(d) / L, 0.0, 1.0);
  return a + s * d;
}

// Deterministic k-means (farthest-point seeding) followed by merging of
// centroids closer than `merge`.
std::vector<Vec> cluster_centroids(const std::vector<Vec>& pts, int kmax, double merge) {
  std::vector<Vec> cent{pts[0]};
  while (int(cent.size()) < kmax) {
    double far = 0;
    std::size_t arg = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      double d = INFINITY;
      for (const auto& c : cent) d = std::min(d, (pts[i] - c).norm());
      if (d > far) far = d, arg = i;
    }
    if (far <= 1e-14) break;
    cent.push_back(pts[arg]);
  }
  std::vector<int> label(pts.size());
  std::vector<int> count;
  for (int it = 0; it < 20; ++it) {
    for (std::size_t i = 0; i < pts.size(); ++i) {
      double best = INFINITY;
      for (std::size_t c = 0; c < cent.size(); ++c) {
        double d = (pts[i] - cent[c]).squaredNorm();
        if (d < best) best = d, label[i] = int(c);
      }
    }
    std::vector<Vec> next(cent.size(), Vec::Zero());
    count.assign(cent.size(), 0);
    for (std::size_t i = 0; i < pts.size(); ++i) next[label[i]] += pts[i], ++count[label[i]];
    for (std::size_t c = 0; c < cent.size(); ++c)
      if (count[c]) cent[c] = next[c] / count[c];
  }
  std::vector<std::pair<Vec, int>> groups;
  for (std::size_t c = 0; c < cent.size(); ++c)
    if (count[c]) groups.emplace_back(cent[c], count[c]);
  for (;;) {
    double best = INFINITY;
    std::size_t a = 0, b = 0;
    for (std::size_t i = 0; i < groups.size(); ++i)
      for (std::size_t j = i + 1; j < groups.size(); ++j) {
        double d = (groups[i].first - groups[j].first).norm();
        if (d < best) best = d, a = i, b = j;
      }
    if (!(best < merge)) break;
    int n = groups[a].second + groups[b].second;
    groups[a].first = (groups[a].first * groups[a].second + groups[b].first * groups[b].second) / n;
    groups[a].second = n;
    groups.erase(groups.begin() + long(b));
  }
  std::vector<Vec> out;
  for (auto& g : groups) out.push_back(g.first);
  return out;
}

}  // namespace

std::vector<Vec> convex_hull(std::vector<Vec> pts) {
  std::sort(pts.begin(), pts.end(), [](const Vec& a, const Vec& b) { return a[0] < b[0] || (a[0] == b[0] && a[1] < b[1]); });
  pts.erase(std::unique(pts.begin(), pts.end(), [](const Vec& a, const Vec& b) { return (a - b).norm() < 1e-15; }),
            pts.end());
  if (pts.size() < 3) return pts;
  std::vector<Vec> h(2 * pts.size());
  std::size_t k = 0;
  for (const auto& p : pts) {
    while (k >= 2 && cross(h[k - 2], h[k - 1], p) <= 0) --k;
    h[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross(h[k - 2], h[k - 1], pts[i]) <= 0) --k;
    h[k++] = pts[i];
  }
  h.resize(k - 1);
  return h;
}

double ConvexCovectorSet::diameter() const {
  double d = 0;
  for (std::size_t i = 0; i < vertices.size(); ++i)
    for (std::size_t j = i + 1; j < vertices.size(); ++j) d = std::max(d, (vertices[i] - vertices[j]).norm());
  return d;
}

double ConvexCovectorSet::distance_to(const Vec& q) const {
  if (dim == 1) {
    double lo = vertices.front()[0], hi = vertices.back()[0];
    return q[0] < lo ? lo - q[0] : (q[0] > hi ? q[0] - hi : 0.0);
  }
  if (vertices.size() == 1) return (vertices[0] - q).norm();
  if (vertices.size() == 2) return (nearest_on_segment(vertices[0], vertices[1], q) - q).norm();
  bool inside = true;
  double d = INFINITY;
  for (std::size_t i = 0; i < vertices.size(); ++i) {
    const Vec& a = vertices[i];
    const Vec& b = vertices[(i + 1) % vertices.size()];
    if (cross(a, b, q) < 0) inside = false;
    d = std::min(d, (nearest_on_segment(a, b, q) - q).norm());
  }
  return inside ? 0.0 : d;
}

bool ConvexCovectorSet::contains(const Vec& q, double margin) const { return distance_to(q) <= margin; }

ConvexCovectorSet ConvexCovectorSet::translated(const Vec& c) const {
  ConvexCovectorSet s = *this;
  for (auto& v : s.vertices) v += dim == 1 ? Vec(c[0], 0.0) : c;
  return s;
}

Vec ConvexCovectorSet::minimize_quadratic(const Mat& A) const {
  if (dim == 1) return {std::clamp(0.0, vertices.front()[0], vertices.back()[0]), 0.0};
  if (vertices.size() > 2 && contains(Vec::Zero(), 0.0)) return Vec::Zero();
  auto energy = [&](const Vec& q) { return q.dot(A * q); };
  Vec best = vertices[0];
  const std::size_t m = vertices.size();
  const std::size_t edges = m == 1 ? 0 : (m == 2 ? 1 : m);
  for (std::size_t i = 0; i < edges; ++i) {
    const Vec& a = vertices[i];
    Vec d = vertices[(i + 1) % m] - a;
    double dd = d.dot(A * d);
    double s = dd > 0 ? std::clamp(-a.dot(A * d) / dd, 0.0, 1.0) : 0.0;
    Vec q = a + s * d;
    if (energy(q) < energy(best)) best = q;
  }
  return best;
}

namespace {

// Largest upper second difference (divided by h^2) within `radius` nodes of each node.
std::vector<double> local_semiconcavity(const ScalarField& u, int radius) {
  const auto& g = u.geometry();
  const double h2 = g.h() * g.h();
  std::vector<double> c(u.size());
  for (std::size_t k = 0; k < u.size(); ++k) {
    auto [i, j] = g.coords(k);
    const double v = u[k];
    const double uxx = u[g.index(i + 1, j)] - 2 * v + u[g.index(i - 1, j)];
    if (g.dim() == 1) {
      c[k] = std::max(uxx, 0.0) / h2;
      continue;
    }
    const double uyy = u[g.index(i, j + 1)] - 2 * v + u[g.index(i, j - 1)];
    const double uxy = 0.25 * (u[g.index(i + 1, j + 1)] - u[g.index(i + 1, j - 1)] - u[g.index(i - 1, j + 1)] +
                               u[g.index(i - 1, j - 1)]);
    c[k] = std::max(0.5 * (uxx + uyy) + std::hypot(0.5 * (uxx - uyy), uxy), 0.0) / h2;
  }
  if (radius <= 0) {
    std::fill(c.begin(), c.end(), *std::max_element(c.begin(), c.end()));
    return c;
  }
  // separable running maximum with periodic wrap
  for (int axis = 0; axis < g.dim(); ++axis) {
    std::vector<double> out(c.size());
    for (std::size_t k = 0; k < c.size(); ++k) {
      auto [i, j] = g.coords(k);
      double m = 0;
      for (int d = -radius; d <= radius; ++d)
        m = std::max(m, c[axis == 0 ? g.index(i + d, j) : g.index(i, j + d)]);
      out[k] = m;
    }
    c = std::move(out);
  }
  return c;
}

}  // namespace

SuperdiffAnalysis::SuperdiffAnalysis(const ScalarField& u, const SystemSpec& spec, const SuperdiffOptions& opts)
    : u_(u), spec_(spec) {
  if (u.geometry().dim() != spec.dim()) throw ConfigError("field and system dimensions differ");
  const double h = u.geometry().h();
  const auto local = local_semiconcavity(u, opts.local_window);
  sing_tols_.resize(u.size());
  for (std::size_t k = 0; k < u.size(); ++k)
    sing_tols_[k] = opts.sing_factor * h * std::max(local[k], opts.semiconcavity_floor);
  sing_tol_ = *std::max_element(sing_tols_.begin(), sing_tols_.end());
  crit_ratio_ = opts.crit_ratio;
  crit_tol_ = crit_ratio_ * sing_tol_;
  nodes_.resize(u.size());
  singular_.assign(u.size(), 0);
  critical_.assign(u.size(), 0);
  if (spec.dim() == 1)
    analyse_1d();
  else
    analyse_2d();
  Vec target = -spec_.c();
  for (std::size_t k = 0; k < u.size(); ++k) {
    if (!std::isfinite(nodes_[k].diameter())) throw InvariantError("superdifferential stencil produced NaN");
    critical_[k] = nodes_[k].contains(target, crit_tol_at(k));
  }
}

void SuperdiffAnalysis::analyse_1d() {
  const auto& g = u_.geometry();
  const double h = g.h();
  auto U = [&](long i) { return u_[g.index(i)]; };
  for (long j = 0; j < g.n(); ++j) {
    const double tol = sing_tols_[std::size_t(j)];
    const double kink = 0.5 * tol * h;  // = 2 C h^2: smooth second differences stay above -kink
    double left = (3 * U(j) - 4 * U(j - 1) + U(j - 2)) / (2 * h);
    if (U(j) - 2 * U(j - 1) + U(j - 2) < -kink) left = (U(j) - U(j - 1)) / h;
    double right = (-3 * U(j) + 4 * U(j + 1) - U(j + 2)) / (2 * h);
    if (U(j) - 2 * U(j + 1) + U(j + 2) < -kink) right = (U(j + 1) - U(j)) / h;
    ConvexCovectorSet s;
    s.dim = 1;
    s.base_point = g.node(std::size_t(j));
    if (left - right > tol) {
      s.vertices = {Vec(right, 0), Vec(left, 0)};
      singular_[std::size_t(j)] = 1;
    } else {
      double central = (U(j + 1) - U(j - 1)) / (2 * h);
      s.vertices = {Vec(central, 0), Vec(central, 0)};
    }
    nodes_[std::size_t(j)] = std::move(s);
  }
}

void SuperdiffAnalysis::analyse_2d() {
  const auto& g = u_.geometry();
  const double h = g.h();
  auto U = [&](long i, long j) { return u_[g.index(i, j)]; };
  auto cell = [&](long i, long j) {  // gradient of the cell with lower-left node (i, j)
    return Vec((U(i + 1, j) - U(i, j) + U(i + 1, j + 1) - U(i, j + 1)) / (2 * h),
               (U(i, j + 1) - U(i, j) + U(i + 1, j + 1) - U(i + 1, j)) / (2 * h));
  };
  std::vector<Vec> pts(8);
  for (std::size_t k = 0; k < g.size(); ++k) {
    auto [i, j] = g.coords(k);
    double cy = (U(i, j + 1) - U(i, j - 1)) / (2 * h), cx = (U(i + 1, j) - U(i - 1, j)) / (2 * h);
    pts[0] = cell(i, j);
    pts[1] = cell(i - 1, j);
    pts[2] = cell(i - 1, j - 1);
    pts[3] = cell(i, j - 1);
    pts[4] = Vec((-3 * U(i, j) + 4 * U(i + 1, j) - U(i + 2, j)) / (2 * h), cy);
    pts[5] = Vec((3 * U(i, j) - 4 * U(i - 1, j) + U(i - 2, j)) / (2 * h), cy);
    pts[6] = Vec(cx, (-3 * U(i, j) + 4 * U(i, j + 1) - U(i, j + 2)) / (2 * h));
    pts[7] = Vec(cx, (3 * U(i, j) - 4 * U(i, j - 1) + U(i, j - 2)) / (2 * h));
    ConvexCovectorSet s;
    s.dim = 2;
    s.base_point = g.node(k);
    double spread = 0;
    for (const auto& p : pts) spread = std::max(spread, (p - pts[0]).norm());
    const double tol = sing_tols_[k];
    if (spread > tol) {
      s.vertices = convex_hull(cluster_centroids(pts, 4, tol));
      if (s.diameter() > tol) singular_[k] = 1;
    }
    if (!singular_[k]) s.vertices = {Vec(cx, cy)};
    nodes_[k] = std::move(s);
  }
}

std::size_t SuperdiffAnalysis::singular_count() const {
  return std::size_t(std::count(singular_.begin(), singular_.end(), 1));
}

ConvexCovectorSet SuperdiffAnalysis::at(const Vec& x) const {
  const auto& g = u_.geometry();
  Vec y = g.wrap(x);
  const double n = g.n();
  std::size_t nearest = g.nearest(y);
  if (g.distance(y, g.node(nearest)) < 1e-9 * g.h()) {
    ConvexCovectorSet s = nodes_[nearest];
    s.base_point = y;
    return s;
  }
  long i0 = long(std::floor(y[0] * n)), j0 = g.dim() == 2 ? long(std::floor(y[1] * n)) : 0;
  std::vector<Vec> verts;
  const int cj = g.dim() == 2 ? 1 : 0;
  for (int dj = 0; dj <= cj; ++dj)
    for (int di = 0; di <= 1; ++di) {
      std::size_t k = g.index(i0 + di, j0 + dj);
      if (singular_[k]) verts.insert(verts.end(), nodes_[k].vertices.begin(), nodes_[k].vertices.end());
    }
  ConvexCovectorSet s;
  s.dim = g.dim();
  s.base_point = y;
  if (verts.empty()) {
    Vec grad = g.clean(u_.gradient(y));
    s.vertices = g.dim() == 1 ? std::vector<Vec>{grad, grad} : std::vector<Vec>{grad};
    return s;
  }
  if (g.dim() == 1) {
    double lo = INFINITY, hi = -INFINITY;
    for (const auto& v : verts) lo = std::min(lo, v[0]), hi = std::max(hi, v[0]);
    s.vertices = {Vec(lo, 0), Vec(hi, 0)};
  } else {
    s.vertices = convex_hull(verts);
  }
  return s;
}

Vec SuperdiffAnalysis::minimal_selection(const Vec& x) const {
  return at(x).translated(spec_.c()).minimize_quadratic(spec_.A(x));
}

std::vector<NodeComponent> connected_components(const TorusGeometry& g, const std::vector<char>& mask, bool diagonal) {
  std::vector<NodeComponent> out;
  std::vector<char> seen(g.size(), 0);
  std::vector<std::array<long, 2>> lift(g.size());
  std::vector<std::array<int, 2>> steps;
  if (g.dim() == 1)
    steps = {{1, 0}, {-1, 0}};
  else if (!diagonal)
    steps = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
  else
    steps = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}, {1, 1}, {1, -1}, {-1, 1}, {-1, -1}};
  for (std::size_t s = 0; s < g.size(); ++s) {
    if (!mask[s] || seen[s]) continue;
    NodeComponent comp;
    std::deque<std::size_t> queue{s};
    seen[s] = 1;
    lift[s] = g.coords(s);
    while (!queue.empty()) {
      std::size_t k = queue.front();
      queue.pop_front();
      comp.nodes.push_back(k);
      comp.lifts.emplace_back(lift[k][0] * g.h(), lift[k][1] * g.h());
      for (auto [di, dj] : steps) {
        std::array<long, 2> L{lift[k][0] + di, lift[k][1] + dj};
        std::size_t nb = g.index(L[0], L[1]);
        if (!mask[nb]) continue;
        if (seen[nb]) {
          if (lift[nb] != L) comp.wraps = true;
          continue;
        }
        seen[nb] = 1;
        lift[nb] = L;
        queue.push_back(nb);
      }
    }
    out.push_back(std::move(comp));
  }
  return out;
}

std::vector<SingularComponent> SuperdiffAnalysis::singular_components() const {
  std::vector<SingularComponent> out;
  for (auto& c : connected_components(u_.geometry(), singular_, false)) {
    SingularComponent s;
    s.meets_window_boundary = c.wraps;
    for (auto k : c.nodes) s.contains_critical = s.contains_critical || critical_[k];
    s.cells = std::move(c.nodes);
    std::sort(s.cells.begin(), s.cells.end());
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<std::vector<std::size_t>> SuperdiffAnalysis::critical_clusters() const {
  std::vector<std::vector<std::size_t>> out;
  for (auto& c : connected_components(u_.geometry(), critical_, true)) out.push_back(std::move(c.nodes));
  return out;
}

Vec SuperdiffAnalysis::refine_critical(const std::vector<std::size_t>& cluster) const {
  const auto& g = u_.geometry();
  // Lift the cluster consistently around its first node.
  const Vec base = g.node(cluster.front());
  std::vector<Vec> lifts;
  Vec sing_sum = Vec::Zero();
  int sing_n = 0;
  for (auto k : cluster) {
    Vec p = base + g.delta(base, g.node(k));
    lifts.push_back(p);
    if (singular_[k]) sing_sum += p, ++sing_n;
  }
  if (sing_n > 0) return g.clean(g.wrap(sing_sum / sing_n));
  const Vec c = spec_.c();
  auto grad_v = [&](const Vec& x) { return Vec(g.clean(u_.gradient(x)) + c); };
  std::size_t best = 0;
  for (std::size_t i = 1; i < lifts.size(); ++i)
    if (grad_v(lifts[i]).norm() < grad_v(lifts[best]).norm()) best = i;
  Vec x = lifts[best];
  const double h = g.h();
  auto bisect_axis = [&](Vec& p, int axis) {
    Vec a = p, b = p;
    a[axis] -= h;
    b[axis] += h;
    double fa = grad_v(a)[axis], fb = grad_v(b)[axis];
    if (fa * fb > 0) return;
    for (int it = 0; it < 60; ++it) {
      Vec m = 0.5 * (a + b);
      double fm = grad_v(m)[axis];
      if ((fm > 0) == (fa > 0))
        a = m, fa = fm;
      else
        b = m;
    }
    p = 0.5 * (a + b);
  };
  for (int round = 0; round < 3; ++round)
    for (int axis = 0; axis < g.dim(); ++axis) bisect_axis(x, axis);
  return g.clean(g.wrap(x));
}

std::vector<Vec> SuperdiffAnalysis::critical_points() const {
  std::vector<Vec> out;
  for (const auto& c : critical_clusters()) out.push_back(refine_critical(c));
  std::sort(out.begin(), out.end(), [](const Vec& a, const Vec& b) { return a[0] < b[0] || (a[0] == b[0] && a[1] < b[1]); });
  return out;
}

ConvexCovectorSet superdifferential(const ScalarField& u, const SystemSpec& spec, const Vec& x) {
  if (!x.allFinite()) throw ConfigError("non-finite point");
  return SuperdiffAnalysis(u, spec).at(x);
}

std::vector<SingularComponent> singular_set(const ScalarField& u, const SystemSpec& spec) {
  return SuperdiffAnalysis(u, spec).singular_components();
}

std::vector<Vec> critical_set(const ScalarField& u, const SystemSpec& spec) {
  return SuperdiffAnalysis(u, spec).critical_points();
}

Vec minimal_selection(const ScalarField& u, const SystemSpec& spec, const Vec& x) {
  return SuperdiffAnalysis(u, spec).minimal_selection(x);
}

}  // namespace wkam
