#pragma once

#include "wkam/system.hpp"

#include <vector>

namespace wkam {

struct ActionOptions {
  int min_segments = 8;
  double segment_time = 0.01;
  double tol_el = 1e-8;  // Euler-Lagrange residual per unit time
  int max_newton = 60;
  bool multistart = true;
  double ambiguity_rel = 1e-9;
};

struct MinimizerCurve {
  std::vector<Vec> knots;
  double time = 0.0;
  double action = 0.0;
  Vec end_velocity = Vec::Zero();
  Vec end_momentum = Vec::Zero();
  double el_residual = 0.0;
  bool converged = false;
  bool ambiguous = false;
};

// Minimal discrete action of broken lines from x to y (lift points) in time t,
// for the Lagrangian L - <c,v> + alpha with c taken from spec.
MinimizerCurve fundamental_solution(const SystemSpec& spec, const Vec& x, const Vec& y, double t, double alpha,
                                    const ActionOptions& opts = {});

// Discrete action of a given broken line (midpoint rule, uniform times).
double discrete_action(const SystemSpec& spec, const std::vector<Vec>& knots, double t, double alpha);

struct TorusAction {
  MinimizerCurve curve;
  Vec x_lift = Vec::Zero();
  Vec y_lift = Vec::Zero();
};

// Infimum over lattice translates of y within `window` periods per axis.
TorusAction torus_fundamental_solution(const SystemSpec& spec, const Vec& x, const Vec& y, double t, double alpha,
                                       int window = 2, const ActionOptions& opts = {});

double t0_estimate(const SystemSpec& spec);

struct EndMomentum {
  Vec momentum = Vec::Zero();
  Vec finite_difference = Vec::Zero();
  double fd_error = 0.0;
  bool ambiguous = false;
};

EndMomentum dy_fundamental_solution(const SystemSpec& spec, const Vec& x, const Vec& y, double t, double alpha,
                                    const ActionOptions& opts = {});

namespace detail {
// Single-start solve from a straight line; used to fill kernel tables.
double straight_start_action(const SystemSpec& spec, const Vec& x, const Vec& y, double t, const ActionOptions& opts);
}

}  // namespace wkam
