#pragma once

#include "wkam/semiflow.hpp"
#include "wkam/weakkam.hpp"

#include <vector>

namespace wkam {

struct BarrierOptions {
  double dt = 1.0;     // spacing of the sampled times t_k = k * dt
  double t_max = 50.0;
};

// Rows of the Peierls barrier from a set of source nodes, computed by dynamic
// programming over a step that divides dt.
struct BarrierTable {
  TorusGeometry geometry;
  std::vector<double> times;
  std::vector<std::size_t> sources;
  std::vector<double> values;                   // sources x nodes
  std::vector<std::vector<double>> diag_trace;  // per source: running minimum of the diagonal over t_k

  double value(std::size_t s, std::size_t node) const { return values[s * geometry.size() + node]; }
  double diagonal(std::size_t s) const { return value(s, sources[s]); }
  double between(std::size_t s, std::size_t t) const { return value(s, sources[t]); }
};

BarrierTable barrier_table(const SystemSpec& spec, const TorusGeometry& geom, double alpha,
                           const std::vector<std::size_t>& sources, const BarrierOptions& opts = {});

// Barrier between the grid nodes nearest to x and y.
double peierls_barrier(const SystemSpec& spec, const Vec& x, const Vec& y, double alpha, double t_max = 50.0,
                       int grid = 0);

struct AubryOptions {
  int grid = 0;    // 0: 512 in 1D, 32 in 2D
  int stride = 0;  // source spacing in nodes; 0: 4 in 1D, 2 in 2D
  double tol_aubry = 1e-3;
  BarrierOptions barrier;
};

struct AubryResult {
  std::vector<Vec> points;
  double cell = 0.0;  // spacing of the sampled sources
  BarrierTable table;
};

AubryResult aubry_set(const SystemSpec& spec, double alpha, const AubryOptions& opts = {});

struct CalibrationResult {
  double residual = 0.0;
  double horizon_reached = 0.0;
  bool truncated = false;
  Vec end = Vec::Zero();  // last point of the curve (lift)
};

// Residual of the calibration identity along the characteristic through x,
// followed backward (default) or forward in time until the horizon or a
// singular cell.
CalibrationResult calibration_residual(const SuperdiffAnalysis& sd, const Vec& x, double alpha, double horizon,
                                       bool forward = false);

struct SingToAubryEntry {
  Vec start = Vec::Zero();
  OmegaReport omega;
  double distance = INFINITY;
};

struct SingToAubryReport {
  std::vector<SingToAubryEntry> entries;
  double min = INFINITY;
  double median = INFINITY;
};

SingToAubryReport sing_to_aubry_distance(Semiflow& flow, const std::vector<Vec>& starts, double horizon,
                                         const std::vector<Vec>& aubry, double tau = 0.0,
                                         FlowMethod method = FlowMethod::intrinsic);

double distance_to_set(const TorusGeometry& g, const std::vector<Vec>& from, const std::vector<Vec>& to);

}  // namespace wkam
