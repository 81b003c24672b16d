#pragma once

#include "wkam/semiflow.hpp"

#include <optional>
#include <vector>

namespace wkam {

// Distances in the chain construction use the max-norm on the lift, so a cell
// has diameter equal to its side.
struct ChainOptions {
  double origin = -0.25;     // lower corner of the window on every axis
  int periods = 2;           // window extent per axis
  int cells_per_period = 0;  // 0: a quarter of the solution grid in 1D, half in 2D
  double epsilon = 0.0;      // 0: two cell diameters
  double T = 1.0;
  double tau = 0.0;          // 0: default flow step
  FlowMethod method = FlowMethod::selection_ode;
};

// Time-T images of the corner/centre sample lattice (spacing half a cell) over
// one period; other periods follow by translation.
class SampledFlowMap {
 public:
  SampledFlowMap(Semiflow& flow, const ChainOptions& opts);

  int dim() const { return dim_; }
  int lattice_per_period() const { return m_; }
  double spacing() const { return spacing_; }
  double origin() const { return origin_; }
  double T() const { return T_; }
  // Sample at lattice coordinates (a, b) of the window and its image.
  Vec sample(long a, long b) const;
  Vec image(long a, long b) const;

 private:
  int dim_, m_;
  double spacing_, origin_, T_;
  std::vector<Vec> images_;  // lift image minus the lift sample, per periodic lattice point
};

struct ChainGraph {
  struct Edge {
    std::size_t from, to;
    double dist;
  };
  int dim = 1;
  double origin = 0.0;
  int periods = 2;
  int cells_per_period = 0;
  double cell = 0.0;
  double epsilon = 0.0;
  double T = 1.0;
  std::vector<Edge> edges;

  int cells_per_axis() const { return periods * cells_per_period; }
  std::size_t cell_count() const {
    return dim == 1 ? std::size_t(cells_per_axis()) : std::size_t(cells_per_axis()) * cells_per_axis();
  }
  std::size_t outflow() const { return cell_count(); }
  std::array<long, 2> coords(std::size_t c) const {
    return dim == 1 ? std::array<long, 2>{long(c), 0} : std::array<long, 2>{long(c % cells_per_axis()), long(c / cells_per_axis())};
  }
  std::size_t cell_index(long i, long j) const { return std::size_t(i + (dim == 2 ? j * cells_per_axis() : 0)); }
  Vec center(std::size_t c) const;
};

ChainGraph build_chain_graph(const SampledFlowMap& phi, const ChainOptions& opts);
ChainGraph build_chain_graph(Semiflow& flow, const ChainOptions& opts = {});

// Cells on a cycle (self-loop or non-trivial strongly connected component).
std::vector<std::size_t> chain_recurrent_set(const ChainGraph& g);

// Cells with a sample x such that |Phi_T(x) - x| <= tol.
std::vector<std::size_t> fixed_point_cells(const SampledFlowMap& phi, const ChainGraph& g, double tol);

// Cells of the window whose closed box contains a lift copy of a torus point.
std::vector<std::size_t> cells_containing(const ChainGraph& g, const std::vector<Vec>& torus_points);

// Hausdorff distance between cell sets in max-norm cell-index units;
// 0 for two empty sets and +inf when exactly one is empty.
double cell_hausdorff(const ChainGraph& g, const std::vector<std::size_t>& a, const std::vector<std::size_t>& b);

struct PreattractorVerdict {
  bool pass = false;
  bool boundary_fixed_point = false;
  double worst_margin = INFINITY;
  std::size_t samples = 0;
};

// Checks that the level set {v = r} moves strictly into {v > r} under the flow.
PreattractorVerdict preattractor_check(Semiflow& flow, double r, const std::vector<double>& times,
                                       const ChainOptions& opts = {});

struct CriticalValue {
  double value;
  int multiplicity;
};
std::vector<CriticalValue> critical_values_histogram(const SuperdiffAnalysis& sd, double resolution = 1e-6);

}  // namespace wkam
