#include "wkam/action.hpp"

#include "wkam/error.hpp"

#include <Eigen/Cholesky>
#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace wkam {

namespace {

template <int D>
class BrokenLineSolver {
 public:
  using V = Eigen::Matrix<double, D, 1>;
  using M = Eigen::Matrix<double, D, D>;

  BrokenLineSolver(const SystemSpec& spec, double t, double alpha, const ActionOptions& opts)
      : spec_(spec), alpha_(alpha), t_(t), opts_(opts) {
    K_ = std::max(opts.min_segments, int(std::ceil(t / opts.segment_time - 1e-9)));
    h_ = t / K_;
    c_ = spec.c().template head<D>();
    seg_.resize(K_);
    grad_.resize(K_ + 1);
    diag_.resize(K_ + 1);
    upper_.resize(K_ + 1);
    schur_.resize(K_ + 1);
    rhs_.resize(K_ + 1);
    step_.resize(K_ + 1);
  }

  int segments() const { return K_; }

  std::vector<V> straight(const V& x, const V& y) const {
    std::vector<V> X(K_ + 1);
    for (int j = 0; j <= K_; ++j) X[j] = x + (y - x) * (double(j) / K_);
    return X;
  }

  double action(const std::vector<V>& X) {
    double s = 0;
    for (int j = 0; j < K_; ++j) s += h_ * lagrangian(X[j], X[j + 1]);
    return s;
  }

  // Runs damped Newton in place; returns the final residual.
  double minimize(std::vector<V>& X, bool& converged) {
    converged = false;
    double S = derivatives(X, true);
    double res = residual();
    std::vector<V> trial(K_ + 1);
    double shift = 0.0;
    for (int it = 0; it < opts_.max_newton && K_ > 1; ++it) {
      if (res <= opts_.tol_el) {
        converged = true;
        break;
      }
      if (!newton_direction(shift)) {
        shift = shift == 0.0 ? 1e-8 / h_ : shift * 10.0;
        if (shift > 1e8) break;
        --it;
        continue;
      }
      double slope = 0;
      for (int i = 1; i < K_; ++i) slope += grad_[i].dot(step_[i]);
      if (slope >= 0) {  // not a descent direction: fall back to a damped gradient step
        for (int i = 1; i < K_; ++i) step_[i] = -grad_[i] * (h_ * 0.1);
        slope = 0;
        for (int i = 1; i < K_; ++i) slope += grad_[i].dot(step_[i]);
      }
      double s = 1.0;
      bool accepted = false;
      for (int ls = 0; ls < 40; ++ls, s *= 0.5) {
        trial = X;
        for (int i = 1; i < K_; ++i) trial[i] += s * step_[i];
        double St = action(trial);
        if (St <= S + 1e-4 * s * slope || (std::abs(St - S) <= 1e-15 * std::max(1.0, std::abs(S)) && s == 1.0)) {
          X.swap(trial);
          accepted = true;
          break;
        }
      }
      if (!accepted) break;
      S = derivatives(X, true);
      double next = residual();
      shift = next < res ? shift * 0.1 : shift;
      if (shift < 1e-12) shift = 0.0;
      res = next;
    }
    if (res <= opts_.tol_el) converged = true;
    if (K_ <= 1) converged = true;
    last_action_ = S;
    return res;
  }

  double last_action() const { return last_action_; }

  // Exact derivative of the discrete action in the terminal knot.
  V end_momentum(const std::vector<V>& X) {
    derivatives(X, false);
    const auto& s = seg_[K_ - 1];
    return s.Lv + 0.5 * h_ * s.Lx;
  }

 private:
  struct Segment {
    double L;
    V Lx, Lv;
    M Lxx, Lxv, Lvv;
  };

  double lagrangian(const V& a, const V& b) {
    V w = (b - a) / h_;
    Vec m = Vec::Zero();
    m.template head<D>() = 0.5 * (a + b);
    double V0 = spec_.V(m);
    M G = spec_.metric(m).template topLeftCorner<D, D>();
    return 0.5 * w.dot(G * w) - V0 - c_.dot(w) + alpha_;
  }

  double derivatives(const std::vector<V>& X, bool second) {
    double S = 0;
    for (int j = 0; j < K_; ++j) {
      V w = (X[j + 1] - X[j]) / h_;
      Vec m = Vec::Zero();
      m.template head<D>() = 0.5 * (X[j] + X[j + 1]);
      spec_.local_jet(m, jet_);
      M G = jet_.metric.template topLeftCorner<D, D>();
      V Gw = G * w;
      Segment& s = seg_[j];
      s.L = 0.5 * w.dot(Gw) - jet_.V - c_.dot(w) + alpha_;
      s.Lv = Gw - c_;
      for (int k = 0; k < D; ++k) {
        M dG = jet_.d_metric[k].template topLeftCorner<D, D>();
        V dGw = dG * w;
        s.Lx[k] = 0.5 * w.dot(dGw) - jet_.dV[k];
        if (second) s.Lxv.row(k) = dGw.transpose();
      }
      if (second) {
        s.Lvv = G;
        for (int k = 0; k < D; ++k)
          for (int l = 0; l < D; ++l) {
            int idx = k + l;  // (0,0)->0, (0,1)->1, (1,1)->2
            M d2G = jet_.d2_metric[idx].template topLeftCorner<D, D>();
            s.Lxx(k, l) = 0.5 * w.dot(d2G * w) - jet_.d2V(k, l);
          }
      }
      S += h_ * s.L;
    }
    for (int i = 1; i < K_; ++i) grad_[i] = h_ * 0.5 * (seg_[i - 1].Lx + seg_[i].Lx) + seg_[i - 1].Lv - seg_[i].Lv;
    return S;
  }

  double residual() const {
    double r = 0;
    for (int i = 1; i < K_; ++i) r = std::max(r, grad_[i].cwiseAbs().maxCoeff());
    return r / h_;
  }

  // Block Thomas solve of H step = -grad with an optional diagonal shift.
  bool newton_direction(double shift) {
    auto blocks = [&](int j, M& aa, M& ab, M& bb) {
      const Segment& s = seg_[j];
      M q = 0.25 * h_ * s.Lxx;
      M xv = s.Lxv, vx = s.Lxv.transpose();
      aa = q - 0.5 * (xv + vx) + s.Lvv / h_;
      ab = q + 0.5 * (xv - vx) - s.Lvv / h_;
      bb = q + 0.5 * (xv + vx) + s.Lvv / h_;
    };
    M aa, ab, bb, prev_bb;
    blocks(0, aa, ab, prev_bb);
    for (int i = 1; i < K_; ++i) {
      blocks(i, aa, ab, bb);
      diag_[i] = prev_bb + aa + shift * M::Identity();
      upper_[i] = ab;
      prev_bb = bb;
    }
    Eigen::LLT<M> llt;
    std::vector<Eigen::LLT<M>> factors(K_);
    for (int i = 1; i < K_; ++i) {
      M C = diag_[i];
      V r = -grad_[i];
      if (i > 1) {
        M W = factors[i - 1].solve(upper_[i - 1]);  // C_{i-1}^{-1} U_{i-1}
        C -= upper_[i - 1].transpose() * W;
        r -= upper_[i - 1].transpose() * factors[i - 1].solve(rhs_[i - 1]);
      }
      factors[i].compute(C);
      if (factors[i].info() != Eigen::Success) return false;
      rhs_[i] = r;
    }
    step_[K_ - 1] = factors[K_ - 1].solve(rhs_[K_ - 1]);
    for (int i = K_ - 2; i >= 1; --i) step_[i] = factors[i].solve(rhs_[i] - upper_[i] * step_[i + 1]);
    return true;
  }

  const SystemSpec& spec_;
  double alpha_, t_;
  ActionOptions opts_;
  int K_;
  double h_;
  V c_;
  LocalJet jet_;
  std::vector<Segment> seg_;
  std::vector<V> grad_, rhs_, step_;
  std::vector<M> diag_, upper_, schur_;
  double last_action_ = 0;
};

void check_time(double t) {
  if (!(t >= 1e-6)) throw ConfigError(fmt::format("action time step {} is too small (minimum 1e-6)", t));
}

template <int D>
MinimizerCurve solve(const SystemSpec& spec, const Vec& x, const Vec& y, double t, double alpha,
                     const ActionOptions& opts) {
  using V = typename BrokenLineSolver<D>::V;
  BrokenLineSolver<D> solver(spec, t, alpha, opts);
  V a = x.head<D>(), b = y.head<D>();
  std::vector<std::vector<V>> seeds{solver.straight(a, b)};
  if (opts.multistart) {
    V e;
    if constexpr (D == 1) {
      e << 1.0;
    } else {
      V d = b - a;
      e = d.norm() > 1e-12 ? V(-d[1] / d.norm(), d[0] / d.norm()) : V(0.0, 1.0);
    }
    for (double sign : {1.0, -1.0}) {
      auto X = seeds[0];
      for (int j = 1; j < solver.segments(); ++j)
        X[j] += sign * 0.5 * std::sin(std::numbers::pi * j / solver.segments()) * e;
      seeds.push_back(std::move(X));
    }
  }
  struct Result {
    std::vector<V> X;
    double S, res;
    bool ok;
  };
  std::vector<Result> results;
  for (auto& X : seeds) {
    bool ok = false;
    double res = solver.minimize(X, ok);
    results.push_back({X, solver.action(X), res, ok});
  }
  auto best = std::min_element(results.begin(), results.end(), [](const Result& p, const Result& q) {
    if (p.ok != q.ok) return p.ok;
    return p.S < q.S;
  });
  MinimizerCurve curve;
  curve.time = t;
  curve.action = best->S;
  curve.el_residual = best->res;
  curve.converged = best->ok;
  for (const auto& r : results) {
    if (&r == &*best || !r.ok) continue;
    double gap = 0;
    for (std::size_t j = 0; j < r.X.size(); ++j) gap = std::max(gap, (r.X[j] - best->X[j]).norm());
    if (gap > 1e-6 && std::abs(r.S - best->S) <= opts.ambiguity_rel * std::max(1.0, std::abs(best->S)))
      curve.ambiguous = true;
  }
  curve.knots.reserve(best->X.size());
  for (const auto& k : best->X) {
    Vec p = Vec::Zero();
    p.head<D>() = k;
    curve.knots.push_back(p);
  }
  curve.knots.front() = spec.dim() == 1 ? Vec{x[0], 0.0} : x;
  curve.knots.back() = spec.dim() == 1 ? Vec{y[0], 0.0} : y;
  Vec mom = Vec::Zero();
  mom.head<D>() = solver.end_momentum(best->X);
  curve.end_momentum = mom;
  curve.end_velocity = spec.A(curve.knots.back()) * (mom + spec.c());
  if (D == 1) curve.end_velocity[1] = 0.0;
  return curve;
}

}  // namespace

MinimizerCurve fundamental_solution(const SystemSpec& spec, const Vec& x, const Vec& y, double t, double alpha,
                                    const ActionOptions& opts) {
  check_time(t);
  if (!x.allFinite() || !y.allFinite() || !std::isfinite(alpha)) throw ConfigError("non-finite action endpoints");
  return spec.dim() == 1 ? solve<1>(spec, x, y, t, alpha, opts) : solve<2>(spec, x, y, t, alpha, opts);
}

double discrete_action(const SystemSpec& spec, const std::vector<Vec>& knots, double t, double alpha) {
  if (knots.size() < 2) throw ConfigError("a broken line needs at least two knots");
  const double h = t / double(knots.size() - 1);
  double s = 0;
  for (std::size_t j = 0; j + 1 < knots.size(); ++j) {
    Vec w = (knots[j + 1] - knots[j]) / h;
    s += h * eval_lagrangian_c(spec, 0.5 * (knots[j] + knots[j + 1]), w, alpha);
  }
  return s;
}

TorusAction torus_fundamental_solution(const SystemSpec& spec, const Vec& x, const Vec& y, double t, double alpha,
                                       int window, const ActionOptions& opts) {
  check_time(t);
  TorusGeometry g(spec.dim(), 16);
  Vec xs = g.wrap(x), ys = g.wrap(y);
  TorusAction best;
  best.curve.action = INFINITY;
  const int wy = spec.dim() == 2 ? window : 0;
  for (int k1 = -wy; k1 <= wy; ++k1)
    for (int k0 = -window; k0 <= window; ++k0) {
      Vec yl = ys + Vec(k0, k1);
      MinimizerCurve c = fundamental_solution(spec, xs, yl, t, alpha, opts);
      if (c.action < best.curve.action) {
        best.curve = std::move(c);
        best.x_lift = xs;
        best.y_lift = yl;
      }
    }
  return best;
}

double t0_estimate(const SystemSpec& spec) {
  const auto& g = spec.growth();
  return g.C1 / (g.kappa1_at_1 + g.C2 + g.C1);
}

EndMomentum dy_fundamental_solution(const SystemSpec& spec, const Vec& x, const Vec& y, double t, double alpha,
                                    const ActionOptions& opts) {
  MinimizerCurve c = fundamental_solution(spec, x, y, t, alpha, opts);
  EndMomentum out;
  out.momentum = c.end_momentum;
  out.ambiguous = c.ambiguous;
  const double d = 1e-5;
  for (int k = 0; k < spec.dim(); ++k) {
    Vec e = Vec::Zero();
    e[k] = d;
    double fp = fundamental_solution(spec, x, y + e, t, alpha, opts).action;
    double fm = fundamental_solution(spec, x, y - e, t, alpha, opts).action;
    out.finite_difference[k] = (fp - fm) / (2 * d);
  }
  out.fd_error = (out.finite_difference - out.momentum).cwiseAbs().maxCoeff();
  return out;
}

namespace detail {
double straight_start_action(const SystemSpec& spec, const Vec& x, const Vec& y, double t, const ActionOptions& opts) {
  ActionOptions o = opts;
  o.multistart = false;
  if (spec.dim() == 1) {
    BrokenLineSolver<1> s(spec, t, 0.0, o);
    auto X = s.straight(x.head<1>(), y.head<1>());
    bool ok;
    s.minimize(X, ok);
    return s.action(X);
  }
  BrokenLineSolver<2> s(spec, t, 0.0, o);
  auto X = s.straight(x, y);
  bool ok;
  s.minimize(X, ok);
  return s.action(X);
}
}  // namespace detail

}  // namespace wkam
