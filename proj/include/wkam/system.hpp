#pragma once

#include "wkam/geometry.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace wkam {

// Value, gradient and Hessian of a scalar function at one point.
struct ScalarJet {
  double value = 0.0;
  Vec grad = Vec::Zero();
  Mat hess = Mat::Zero();
};

using JetFn = std::function<ScalarJet(const Vec&)>;

// Everything the action solver needs at one point. `metric` is the kinetic
// matrix of the Lagrangian (the inverse of the Hamiltonian matrix A).
struct LocalJet {
  double V = 0.0;
  Vec dV = Vec::Zero();
  Mat d2V = Mat::Zero();
  Mat metric = Mat::Identity();
  std::array<Mat, 2> d_metric{Mat::Zero(), Mat::Zero()};
  std::array<Mat, 3> d2_metric{Mat::Zero(), Mat::Zero(), Mat::Zero()};  // (0,0), (0,1), (1,1)
};

// Growth constants of the Lagrangian with k = 1 and theta(r) = lambda r^2 / 2.
struct GrowthConstants {
  double lambda = 1.0;      // lower eigenvalue bound of the kinetic matrix
  double lambda_max = 1.0;  // upper eigenvalue bound of the kinetic matrix
  double a_max = 1.0;       // upper eigenvalue bound of A
  double kappa1_at_1 = 0.5;
  double theta_star_k = 0.5;
  double c0 = 0.0;
  double C1 = 1.0;
  double C2 = 0.5;
  double potential_oscillation = 0.0;  // max V - min V
};

// Mechanical system H = <A(x)p,p>/2 + V(x) on the torus, with the kinetic
// matrix restricted to conformal(x) * base_metric. The conformal factor is
// optional; without it the metric is constant.
class SystemSpec {
 public:
  SystemSpec(std::string name, std::vector<double> params, int dim, JetFn potential, Mat base_metric,
             JetFn conformal = {});

  const std::string& name() const { return name_; }
  const std::vector<double>& params() const { return params_; }
  int dim() const { return dim_; }
  const Vec& c() const { return c_; }
  std::optional<double> alpha() const { return alpha_; }
  const GrowthConstants& growth() const { return growth_; }
  bool constant_metric() const { return !conformal_; }

  SystemSpec with_c(const Vec& c) const;
  SystemSpec with_alpha(double alpha) const;

  double V(const Vec& x) const;
  Mat metric(const Vec& x) const;  // kinetic matrix, A^{-1}
  Mat A(const Vec& x) const;
  void local_jet(const Vec& x, LocalJet& out) const;

  double kappa1(double r) const;
  // Stable textual identity used in cache keys.
  std::string identity() const;

 private:
  void compute_growth();

  std::string name_;
  std::vector<double> params_;
  int dim_;
  JetFn potential_;
  double potential_shift_ = 0.0;
  Mat base_metric_;
  JetFn conformal_;
  Vec c_ = Vec::Zero();
  std::optional<double> alpha_;
  GrowthConstants growth_;
};

double eval_hamiltonian(const SystemSpec& spec, const Vec& x, const Vec& p, bool shifted);
double eval_lagrangian_c(const SystemSpec& spec, const Vec& x, const Vec& v, double alpha);

// Registry: pendulum [amplitude], free [dim], pendulum2d, nearly_integrable [eps],
// bump_metric [strength, radius, cx, cy].
SystemSpec make_system(const std::string& name, const std::vector<double>& params = {}, Vec c = Vec::Zero());
std::vector<std::string> registered_systems();

class ScalarField;
// Potential and conformal factor sampled on a grid, interpolated bicubically.
SystemSpec make_tabulated(const ScalarField& potential, const ScalarField* conformal, Vec c = Vec::Zero());

}  // namespace wkam
