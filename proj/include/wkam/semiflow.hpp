#pragma once

#include "wkam/superdiff.hpp"

#include <optional>
#include <string>
#include <vector>

namespace wkam {

enum class FlowMethod { intrinsic, selection_ode };
std::string to_string(FlowMethod m);
FlowMethod parse_flow_method(const std::string& s);

struct Trajectory {
  double step = 0.0;
  FlowMethod method = FlowMethod::intrinsic;
  std::vector<double> times;
  std::vector<Vec> lift;         // positions on the universal cover
  std::vector<Vec> selected_p;   // full covector c + q of least energy
  std::vector<double> v_values;  // <c,x> + u(x) on the lift
  int ambiguous_steps = 0;
  double max_v_drop = 0.0;

  Vec torus_point(std::size_t i, const TorusGeometry& g) const { return g.wrap(lift[i]); }
  std::size_t size() const { return lift.size(); }
};

enum class OmegaKind { stationary, closed, recurrent_unbounded_return, undecided };
std::string to_string(OmegaKind k);

struct OmegaReport {
  OmegaKind kind = OmegaKind::undecided;
  std::vector<Vec> support;  // cluster centres on the torus
  std::optional<double> period_estimate;
  std::optional<int> sigma_gap;  // largest observed return-index gap
  double closure_error = 0.0;
};

struct FlowOptions {
  double cluster_cells = 3.0;
  double safety = 1.5;
  int substeps = 8;
  double ambiguity_rel = 1e-9;
  // Allowed decrease of v per step before integration aborts, in units of h * (Lip u + |c|).
  double monotone_slack = 0.01;
};

// Generalized characteristics of v = <c,x> + u for one solution.
class Semiflow {
 public:
  Semiflow(const SuperdiffAnalysis& sd, double alpha, const FlowOptions& opts = {});

  const SuperdiffAnalysis& analysis() const { return sd_; }
  const TorusGeometry& geometry() const { return sd_.field().geometry(); }
  double cluster_tol() const { return opts_.cluster_cells * geometry().h(); }
  double lambda0() const { return lambda0_; }

  double v(const Vec& lift) const;
  Vec step_intrinsic(const Vec& x, double tau, bool* ambiguous = nullptr);
  Vec step_selection_ode(const Vec& x, double tau) const;
  Vec step(const Vec& x, double tau, FlowMethod m, bool* ambiguous = nullptr);
  // Time-T map on the lift (T a multiple of tau up to rounding).
  Vec flow(const Vec& x, double T, double tau, FlowMethod m);
  Trajectory integrate(const Vec& x0, double T, double tau, FlowMethod m);

 private:
  double objective(const Vec& x, const Vec& y, double tau) const;

  const SuperdiffAnalysis& sd_;
  SystemSpec spec0_;
  double alpha_;
  FlowOptions opts_;
  double lambda0_;
  double speed_bound_;
};

double default_flow_step(const SystemSpec& spec);

OmegaReport omega_limit(const Trajectory& tr, const TorusGeometry& g, double burn_in = 0.5, double cluster_tol = 0.0);

}  // namespace wkam
