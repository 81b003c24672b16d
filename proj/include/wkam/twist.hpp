#pragma once

#include "wkam/system.hpp"
#include "wkam/weakkam.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace wkam {

class DistanceGraph;

enum class GeneratingKind { analytic, distance_grid };
std::string to_string(GeneratingKind k);

// Periodic generating function h(x, y) = h(x + 1, y + 1) of a twist map.
class GeneratingFunction {
 public:
  struct Jet {
    double value, d1, d2, d11, d12, d22;
  };

  // 1/2 (y - x)^2 + k / (4 pi^2) cos(2 pi x)
  static GeneratingFunction standard_map(double k);

  GeneratingKind kind() const { return kind_; }
  const std::vector<double>& params() const { return params_; }
  double operator()(double x, double y) const { return jet(x, y).value; }
  Jet jet(double x, double y) const;
  // Tabulated range of y - x for the distance kind (infinite for analytic).
  double width() const;
  const DistanceGraph* graph() const { return graph_.get(); }

 private:
  friend GeneratingFunction distance_generating_function(const SystemSpec&, int, double, int);
  GeneratingKind kind_ = GeneratingKind::analytic;
  std::vector<double> params_;
  std::shared_ptr<const DistanceGraph> graph_;
};

// Shortest-path distance from (0, x) to (1, y) on the lifted strip [0,1] x R,
// over a grid graph whose edges are all primitive lattice steps up to
// max-norm `reach`, weighted by Riemannian length (Simpson rule).
GeneratingFunction distance_generating_function(const SystemSpec& spec2d, int resolution, double width = 1.5,
                                                int sources = 0);

// Grid geodesic from (0, x) to (1, y), as torus points.
std::vector<Vec> grid_geodesic(const GeneratingFunction& h, double x, double y);

struct Configuration {
  long first = 0;         // index of x.front()
  std::vector<double> x;  // window of positions
  long p = 0, q = 0;      // rotation type; q = 0 for non-periodic windows
  double action = 0.0;    // sum of h over one period
  double residual = 0.0;  // largest interior Euler-Lagrange defect
  bool stagnated = false;

  long last() const { return first + long(x.size()) - 1; }
  double at(long i) const { return x.at(std::size_t(i - first)); }
};

double el_defect(const GeneratingFunction& h, double prev, double cur, double next);
double configuration_residual(const GeneratingFunction& h, const Configuration& cfg);

struct ConfigOptions {
  double tol = 1e-10;
  int starts = 8;
  int max_sweeps = 400;
  int max_newton = 60;
};

// Minimizer of the periodic action over one period with x_q = x_0 + p, returned
// on the window [-m, m] with m = max(q, 8).
Configuration minimal_periodic_config(const GeneratingFunction& h, long p, long q, const ConfigOptions& opts = {});

// Minimal segment with fixed ends x_0 = a, x_q = b.
Configuration minimal_segment(const GeneratingFunction& h, double a, double b, long q, const ConfigOptions& opts = {},
                              const std::vector<double>* guess = nullptr);

double rotation_number(const Configuration& cfg);

// Continued-fraction convergents of omega with denominators up to max_q.
std::vector<std::pair<long, long>> convergents(double omega, long max_q);

struct Gap {
  double x, y;
  double width() const { return y - x; }
};

// Gap of the minimal (p, q) orbit containing x, for the convergent p/q of omega with q >= 50.
Gap minimal_gap(const GeneratingFunction& h, double omega, double x);

// Images of the interval (x0, y0) under minimal segments of a convergent p/q
// of omega with q >= 50. The interval must lie inside one gap of that orbit.
std::vector<Gap> gap_sequence(const GeneratingFunction& h, double omega, double x0, double y0, int iterations);
// Total overlap length of the first `count` gaps reduced mod 1.
double gap_overlap(const std::vector<Gap>& gaps, std::size_t count);

// Average action per step of the minimal (p, q) configuration.
double stable_norm(const GeneratingFunction& h, long p, long q);

// Cohomology class dual to the rotation direction (1, omega) for a geodesic
// system, from the stable norm at neighbouring convergents.
Vec dual_cohomology(const GeneratingFunction& h, double omega, long min_q = 50);

struct SingNearOptions {
  int grid = 128;
  int gf_resolution = 128;
  double omega = 0.6180339887498949;
  long min_q = 50;
  std::optional<Vec> c;  // default: dual to (1, omega)
  WeakKamOptions weak_kam;
  int max_iter_coarse = 4000;
};

struct SingNearReport {
  bool vacuous = false;
  bool pass = false;
  double distance = INFINITY;
  double epsilon = 0.05;
  Vec c = Vec::Zero();
  long p = 0, q = 0;
  double alpha = 0.0;
  bool weak_kam_converged = false;
  int iterations = 0;
  std::size_t singular_nodes = 0;
  std::vector<Vec> proxy;
  double proxy_invariance = 0.0;  // largest distance of a recursion image to the proxy
};

SingNearReport sing_near_aubry_check(const SystemSpec& spec2d, double epsilon, const SingNearOptions& opts = {});

}  // namespace wkam
