#pragma once

#include "wkam/action.hpp"
#include "wkam/field.hpp"
#include "wkam/system.hpp"

#include <optional>
#include <vector>

namespace wkam {

// Table of A_tau(x_node - o*h, x_node) at zero cohomology for integer offsets
// o with |o| <= radius (a disk in 2D). Cohomology and alpha enter the
// Lax-Oleinik sweeps as affine terms, so one table serves every c.
class ActionKernel {
 public:
  ActionKernel(const SystemSpec& spec, const TorusGeometry& geom, double tau, int radius);

  const TorusGeometry& geometry() const { return geom_; }
  double tau() const { return tau_; }
  int radius() const { return radius_; }
  int width() const { return 2 * radius_ + 1; }
  std::size_t stride() const { return geom_.dim() == 1 ? std::size_t(width()) : std::size_t(width()) * width(); }
  bool inside(int o0, int o1) const { return o0 * o0 + o1 * o1 <= radius_ * radius_; }
  std::size_t column(int o0, int o1) const {
    return geom_.dim() == 1 ? std::size_t(o0 + radius_) : std::size_t(o0 + radius_) + std::size_t(o1 + radius_) * width();
  }
  // +inf outside the disk.
  double at(std::size_t node, int o0, int o1 = 0) const { return table_[node * stride() + column(o0, o1)]; }
  const double* row(std::size_t node) const { return table_.data() + node * stride(); }
  std::span<const double> table() const { return table_; }

  void grow(const SystemSpec& spec, int new_radius);

 private:
  void fill(const SystemSpec& spec, int old_radius);

  TorusGeometry geom_;
  double tau_;
  int radius_;
  std::vector<double> table_;
};

struct SweepReport {
  bool boundary_hit = false;
  int max_offset = 0;
};

ScalarField sweep_minus(const ActionKernel& k, const ScalarField& u, const Vec& c, double alpha, SweepReport* rep = nullptr);
ScalarField sweep_plus(const ActionKernel& k, const ScalarField& u, const Vec& c, double alpha, SweepReport* rep = nullptr);

// Default step: t0/2 in 1D; in 2D additionally capped at three grid cells so the
// kernel disk stays small (the cost per unit time grows with tau in 2D).
double default_tau(const SystemSpec& spec, const TorusGeometry& geom);

// Owns a kernel for one system, grid and step; grows the kernel radius on demand.
class LaxOleinik {
 public:
  LaxOleinik(const SystemSpec& spec, const TorusGeometry& geom, double tau = 0.0);

  const SystemSpec& system() const { return spec_; }
  const TorusGeometry& geometry() const { return geom_; }
  double tau() const { return kernel_.tau(); }
  const ActionKernel& kernel() const { return kernel_; }

  ScalarField minus(const ScalarField& u, const Vec& c, double alpha);
  ScalarField plus(const ScalarField& u, const Vec& c, double alpha);

 private:
  SystemSpec spec_;  // zero cohomology copy
  TorusGeometry geom_;
  ActionKernel kernel_;
  int max_radius_;
};

struct AlphaOptions {
  double tol_alpha = 1e-4;
  int max_iter = 200000;
  // When set, stop as soon as the bracket decides whether alpha exceeds it.
  std::optional<double> threshold;
  double relaxation = 0.5;  // averaging weight of the new iterate, in (0, 1]
};

struct AlphaResult {
  double alpha = 0.0;
  double lower = -INFINITY;
  double upper = INFINITY;
  int iterations = 0;
  bool converged = false;
  ScalarField field;  // last iterate, min-anchored
  std::vector<double> tail;  // last bracket widths
};

// Bracket [-max inc/tau, -min inc/tau] of the one-step increments T^- u - u; it
// contains alpha for every u because T^- is monotone and commutes with constants,
// so it stays valid along the averaged iteration.
AlphaResult compute_alpha(LaxOleinik& lo, const Vec& c, const AlphaOptions& opts = {},
                          const ScalarField* warm = nullptr);
double compute_alpha(const SystemSpec& spec, const Vec& c, int grid = 0);

struct WeakKamOptions {
  double tol_alpha = 1e-4;
  double tol_fix = 1e-9;
  int max_iter = 100000;
  double relaxation = 0.5;
};

struct WeakKamResult {
  ScalarField u;  // anchored so that min u = 0
  double alpha = 0.0;
  double alpha_lower = -INFINITY, alpha_upper = INFINITY;
  double residual = INFINITY;  // oscillation of the last increment
  int iterations = 0;
  bool converged = false;
  std::vector<double> residual_tail;
};

WeakKamResult weak_kam_solution(LaxOleinik& lo, const Vec& c, const WeakKamOptions& opts = {},
                                const ScalarField* initial = nullptr);
WeakKamResult weak_kam_solution(const SystemSpec& spec, int grid = 0, const WeakKamOptions& opts = {});

// Spec-level single steps with c taken from the system; t must lie in (0, t0].
ScalarField lax_oleinik_minus(const SystemSpec& spec, const ScalarField& u, double t, double alpha);
ScalarField lax_oleinik_plus(const SystemSpec& spec, const ScalarField& u, double t, double alpha);

int default_grid(int dim);

}  // namespace wkam
