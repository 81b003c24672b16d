#pragma once

#include "wkam/field.hpp"
#include "wkam/system.hpp"

#include <vector>

namespace wkam {

// Approximate superdifferential. In 1D `vertices` holds {right slope, left slope};
// in 2D the vertices of a counter-clockwise convex polygon (one vertex for a
// singleton, two for a segment).
struct ConvexCovectorSet {
  Vec base_point = Vec::Zero();
  std::vector<Vec> vertices;
  int dim = 1;

  double diameter() const;
  bool contains(const Vec& q, double margin) const;
  double distance_to(const Vec& q) const;
  ConvexCovectorSet translated(const Vec& c) const;
  // argmin of <A q, q> over the set.
  Vec minimize_quadratic(const Mat& A) const;
};

struct SuperdiffOptions {
  double sing_factor = 4.0;
  double crit_ratio = 0.5;
  double semiconcavity_floor = 1.0;
  // Semiconcavity is measured within this many nodes of each node; 0 uses the global maximum.
  int local_window = 2;
};

struct SingularComponent {
  std::vector<std::size_t> cells;
  bool meets_window_boundary = false;  // the lift of the component is unbounded
  bool contains_critical = false;
};

// Node-wise superdifferential analysis of one solution u for one system (with its c).
class SuperdiffAnalysis {
 public:
  SuperdiffAnalysis(const ScalarField& u, const SystemSpec& spec, const SuperdiffOptions& opts = {});

  const ScalarField& field() const { return u_; }
  const SystemSpec& system() const { return spec_; }
  // Largest node threshold; thresholds scale with the local semiconcavity of u.
  double sing_tol() const { return sing_tol_; }
  double crit_tol() const { return crit_tol_; }
  double sing_tol_at(std::size_t k) const { return sing_tols_[k]; }
  double crit_tol_at(std::size_t k) const { return crit_ratio_ * sing_tols_[k]; }

  const ConvexCovectorSet& node_set(std::size_t k) const { return nodes_[k]; }
  bool singular(std::size_t k) const { return singular_[k]; }
  bool critical(std::size_t k) const { return critical_[k]; }
  std::size_t singular_count() const;

  ConvexCovectorSet at(const Vec& x) const;
  // Full covector c + q of least kinetic energy.
  Vec minimal_selection(const Vec& x) const;

  std::vector<SingularComponent> singular_components() const;
  std::vector<Vec> critical_points() const;
  // Critical nodes grouped by connectivity, as node index lists.
  std::vector<std::vector<std::size_t>> critical_clusters() const;

 private:
  void analyse_1d();
  void analyse_2d();
  Vec refine_critical(const std::vector<std::size_t>& cluster) const;

  ScalarField u_;
  SystemSpec spec_;
  double sing_tol_ = 0, crit_tol_ = 0, crit_ratio_ = 0.5;
  std::vector<double> sing_tols_;
  std::vector<ConvexCovectorSet> nodes_;
  std::vector<char> singular_, critical_;
};

ConvexCovectorSet superdifferential(const ScalarField& u, const SystemSpec& spec, const Vec& x);
std::vector<SingularComponent> singular_set(const ScalarField& u, const SystemSpec& spec);
std::vector<Vec> critical_set(const ScalarField& u, const SystemSpec& spec);
Vec minimal_selection(const ScalarField& u, const SystemSpec& spec, const Vec& x);

// Convex hull (counter-clockwise, no collinear points) of planar points.
std::vector<Vec> convex_hull(std::vector<Vec> pts);

// Nodes connected through face neighbours on the torus, with a flag telling
// whether the component wraps around (unbounded lift).
struct NodeComponent {
  std::vector<std::size_t> nodes;
  bool wraps = false;
  std::vector<Vec> lifts;  // lift position of each node, consistent along the component
};
std::vector<NodeComponent> connected_components(const TorusGeometry& g, const std::vector<char>& mask, bool diagonal);

}  // namespace wkam
