#include "wkam/system.hpp"

#include "wkam/error.hpp"
#include "wkam/field.hpp"

#include <Eigen/Eigenvalues>
#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace wkam {

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;

void require_finite(const Vec& v, const char* what) {
  if (!v.allFinite()) throw ConfigError(fmt::format("non-finite {} passed to system evaluation", what));
}

std::pair<double, double> eig_range(const Mat& m, int dim) {
  if (dim == 1) return {m(0, 0), m(0, 0)};
  Eigen::SelfAdjointEigenSolver<Mat> es(m, Eigen::EigenvaluesOnly);
  return {es.eigenvalues()[0], es.eigenvalues()[1]};
}

JetFn cosine_potential(int dim, double amplitude) {
  return [dim, amplitude](const Vec& x) {
    ScalarJet j;
    for (int a = 0; a < dim; ++a) {
      double s = std::sin(two_pi * x[a]), c = std::cos(two_pi * x[a]);
      j.value += amplitude * (c - 1.0);
      j.grad[a] = -amplitude * two_pi * s;
      j.hess(a, a) = -amplitude * two_pi * two_pi * c;
    }
    return j;
  };
}

JetFn zero_jet() {
  return [](const Vec&) { return ScalarJet{}; };
}

// 1 + strength * (1 - rho^2/r^2)^3 inside the disk of radius r around center.
JetFn bump_factor(double strength, double radius, Vec center) {
  return [=](const Vec& x) {
    ScalarJet j;
    j.value = 1.0;
    Vec d{periodic_delta(x[0] - center[0]), periodic_delta(x[1] - center[1])};
    double q = d.squaredNorm() / (radius * radius);
    if (q >= 1.0) return j;
    double w = 1.0 - q;
    Vec dq = 2.0 * d / (radius * radius);
    double b1 = -3.0 * w * w, b2 = 6.0 * w;
    j.value += strength * w * w * w;
    j.grad = strength * b1 * dq;
    j.hess = strength * (b2 * dq * dq.transpose() + b1 * (2.0 / (radius * radius)) * Mat::Identity());
    return j;
  };
}

}  // namespace

SystemSpec::SystemSpec(std::string name, std::vector<double> params, int dim, JetFn potential, Mat base_metric,
                       JetFn conformal)
    : name_(std::move(name)),
      params_(std::move(params)),
      dim_(dim),
      potential_(std::move(potential)),
      base_metric_(std::move(base_metric)),
      conformal_(std::move(conformal)) {
  if (dim_ != 1 && dim_ != 2) throw ConfigError("system dimension must be 1 or 2");
  if (dim_ == 1) {
    base_metric_(0, 1) = base_metric_(1, 0) = 0.0;
    base_metric_(1, 1) = 1.0;
  }
  compute_growth();
}

void SystemSpec::compute_growth() {
  const int n = dim_ == 1 ? 2048 : 256;
  TorusGeometry g(dim_, n);
  double vmax = -INFINITY, vmin = INFINITY;
  double lam = INFINITY, lam_max = 0.0, kinetic_max = -INFINITY;
  for (std::size_t k = 0; k < g.size(); ++k) {
    Vec x = g.node(k);
    double v = potential_(x).value;
    vmax = std::max(vmax, v);
    vmin = std::min(vmin, v);
    auto [lo, hi] = eig_range(metric(x), dim_);
    if (!(lo > 1e-12)) throw ConfigError(fmt::format("system '{}': kinetic matrix not positive definite", name_));
    lam = std::min(lam, lo);
    lam_max = std::max(lam_max, hi);
  }
  potential_shift_ = -vmax;
  for (std::size_t k = 0; k < g.size(); ++k) {
    Vec x = g.node(k);
    kinetic_max = std::max(kinetic_max, 0.5 * eig_range(metric(x), dim_).second - V(x));
  }
  growth_.lambda = lam;
  growth_.lambda_max = lam_max;
  growth_.a_max = 1.0 / lam;
  growth_.kappa1_at_1 = kinetic_max;
  growth_.theta_star_k = 1.0 / (2.0 * lam);
  growth_.c0 = 0.0;  // L >= theta(|v|) because -V >= 0 after normalization
  growth_.C1 = 1.0;
  growth_.C2 = growth_.theta_star_k + growth_.c0;
  growth_.potential_oscillation = vmax - vmin;
}

SystemSpec SystemSpec::with_c(const Vec& c) const {
  require_finite(c, "cohomology class");
  SystemSpec s = *this;
  s.c_ = dim_ == 1 ? Vec{c[0], 0.0} : c;
  s.alpha_.reset();
  return s;
}

SystemSpec SystemSpec::with_alpha(double alpha) const {
  if (!std::isfinite(alpha)) throw ConfigError("non-finite alpha");
  SystemSpec s = *this;
  s.alpha_ = alpha;
  return s;
}

double SystemSpec::V(const Vec& x) const { return potential_(x).value + potential_shift_; }

Mat SystemSpec::metric(const Vec& x) const {
  return conformal_ ? Mat(conformal_(x).value * base_metric_) : base_metric_;
}

Mat SystemSpec::A(const Vec& x) const { return metric(x).inverse(); }

void SystemSpec::local_jet(const Vec& x, LocalJet& out) const {
  ScalarJet p = potential_(x);
  out.V = p.value + potential_shift_;
  out.dV = p.grad;
  out.d2V = p.hess;
  if (!conformal_) {
    out.metric = base_metric_;
    out.d_metric = {Mat::Zero(), Mat::Zero()};
    out.d2_metric = {Mat::Zero(), Mat::Zero(), Mat::Zero()};
    return;
  }
  ScalarJet s = conformal_(x);
  out.metric = s.value * base_metric_;
  out.d_metric = {s.grad[0] * base_metric_, s.grad[1] * base_metric_};
  out.d2_metric = {s.hess(0, 0) * base_metric_, s.hess(0, 1) * base_metric_, s.hess(1, 1) * base_metric_};
}

double SystemSpec::kappa1(double r) const {
  if (r == 1.0) return growth_.kappa1_at_1;
  const int n = dim_ == 1 ? 2048 : 256;
  TorusGeometry g(dim_, n);
  double best = -INFINITY;
  for (std::size_t k = 0; k < g.size(); ++k) {
    Vec x = g.node(k);
    best = std::max(best, 0.5 * r * r * eig_range(metric(x), dim_).second - V(x));
  }
  return best;
}

std::string SystemSpec::identity() const {
  std::string s = fmt::format("{}|dim={}|c={:.17g},{:.17g}|p=", name_, dim_, c_[0], c_[1]);
  for (double p : params_) s += fmt::format("{:.17g};", p);
  return s;
}

double eval_hamiltonian(const SystemSpec& spec, const Vec& x, const Vec& p, bool shifted) {
  require_finite(x, "point");
  require_finite(p, "covector");
  Vec q = p;
  if (spec.dim() == 1) q[1] = 0.0;
  if (shifted) {
    if (!spec.alpha()) throw ConfigError("shifted Hamiltonian needs an alpha value attached to the system");
    q += spec.c();
  }
  double h = 0.5 * q.dot(spec.A(x) * q) + spec.V(x);
  return shifted ? h - *spec.alpha() : h;
}

double eval_lagrangian_c(const SystemSpec& spec, const Vec& x, const Vec& v, double alpha) {
  require_finite(x, "point");
  require_finite(v, "velocity");
  Vec w = v;
  if (spec.dim() == 1) w[1] = 0.0;
  return 0.5 * w.dot(spec.metric(x) * w) - spec.V(x) - spec.c().dot(w) + alpha;
}

namespace {
double param_or(const std::vector<double>& p, std::size_t i, double fallback) {
  return i < p.size() ? p[i] : fallback;
}
}  // namespace

SystemSpec make_system(const std::string& name, const std::vector<double>& params, Vec c) {
  for (double p : params)
    if (!std::isfinite(p)) throw ConfigError("non-finite system parameter");
  SystemSpec spec = [&]() -> SystemSpec {
    if (name == "pendulum") {
      double amp = param_or(params, 0, 1.0);
      if (amp <= 0) throw ConfigError("pendulum amplitude must be positive");
      return {name, {amp}, 1, cosine_potential(1, amp), Mat::Identity()};
    }
    if (name == "free") {
      int dim = int(param_or(params, 0, 1.0));
      if (dim != 1 && dim != 2) throw ConfigError("free system dimension must be 1 or 2");
      return {name, {double(dim)}, dim, zero_jet(), Mat::Identity()};
    }
    if (name == "pendulum2d") return {name, {}, 2, cosine_potential(2, 1.0), Mat::Identity()};
    if (name == "nearly_integrable") {
      double eps = param_or(params, 0, 1e-3);
      if (eps < 0) throw ConfigError("nearly_integrable epsilon must be nonnegative");
      return {name, {eps}, 1, cosine_potential(1, eps), Mat::Identity()};
    }
    if (name == "bump_metric") {
      double strength = param_or(params, 0, 9.0), radius = param_or(params, 1, 0.3);
      Vec center{param_or(params, 2, 0.5), param_or(params, 3, 0.5)};
      if (strength < 0 || radius <= 0 || radius >= 0.5) throw ConfigError("bump_metric: need strength >= 0, 0 < radius < 1/2");
      return {name, {strength, radius, center[0], center[1]}, 2, zero_jet(), Mat::Identity(),
              bump_factor(strength, radius, center)};
    }
    throw ConfigError(fmt::format("unknown system '{}'", name));
  }();
  return spec.with_c(c);
}

std::vector<std::string> registered_systems() {
  return {"pendulum", "free", "pendulum2d", "nearly_integrable", "bump_metric"};
}

SystemSpec make_tabulated(const ScalarField& potential, const ScalarField* conformal, Vec c) {
  if (conformal && !(conformal->geometry() == potential.geometry()))
    throw ConfigError("tabulated potential and conformal factor must share a grid");
  if (conformal && conformal->min() <= 0) throw ConfigError("tabulated conformal factor must be positive");
  auto pot = std::make_shared<ScalarField>(potential);
  JetFn vfn = [pot](const Vec& x) { return pot->jet(x, 2); };
  JetFn sfn;
  if (conformal) {
    auto conf = std::make_shared<ScalarField>(*conformal);
    sfn = [conf](const Vec& x) { return conf->jet(x, 2); };
  }
  SystemSpec spec("tabulated", {}, potential.geometry().dim(), std::move(vfn), Mat::Identity(), std::move(sfn));
  return spec.with_c(c);
}

}  // namespace wkam
