#pragma once

#include "wkam/system.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace wkam {

// Flat key/value configuration with sections (INI). Zero for a numeric
// setting means "use the module default".
struct RunConfig {
  // [system]
  std::string system = "pendulum";
  std::vector<double> params;
  std::vector<double> c{0.0};
  // [grid]
  int grid = 0;
  double tau = 0.0;
  // [tolerances]
  double tol_alpha = 1e-4;
  double tol_fix = 1e-9;
  double sing_factor = 4.0;   // sing_tol in units of h * max(semiconcavity, 1)
  double crit_ratio = 0.5;    // crit_tol / sing_tol
  double cluster_cells = 3.0; // cluster_tol in grid cells
  double tol_aubry = 1e-3;
  double tol_cal = 1e-2;
  // [flow]
  std::string flow_method = "intrinsic";
  double flow_step = 0.0;
  double horizon = 10.0;
  std::vector<double> start{0.25};
  // [conley]
  int chain_cells = 0;
  double chain_epsilon = 0.0;
  double chain_time = 1.0;
  // [aubry]
  double t_max = 50.0;
  int barrier_grid = 0;
  // [twist]
  double twist_k = 0.5;
  long twist_p = 1, twist_q = 2;
  double omega = 0.6180339887498949;
  int gf_resolution = 128;
  double epsilon = 0.05;
  // [run]
  std::string output = "out";
  std::string cache;
  std::uint64_t seed = 1;

  bool operator==(const RunConfig&) const = default;

  SystemSpec make_spec() const;
  Vec c_vector() const;
  Vec start_vector() const;
  // Throws ConfigError on invalid settings.
  void validate() const;
  std::string serialize() const;
  static RunConfig parse(const std::string& text);
  static RunConfig load(const std::string& path);
  // Hash over the keys that determine the weak KAM solution.
  std::string solution_hash() const;
  std::string full_hash() const;
};

}  // namespace wkam
