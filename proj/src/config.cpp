#include "wkam/config.hpp"

#include "wkam/action.hpp"
#include "wkam/io.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>
#include <algorithm>
#include <map>
#include <sstream>

namespace wkam {

namespace pt = boost::property_tree;

namespace {

std::string join(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + format_double(v[i]);
  return s;
}

std::vector<double> split(const std::string& s, const std::string& key) {
  std::vector<double> out;
  std::istringstream in(s);
  std::string tok;
  while (in >> tok) {
    std::size_t used = 0;
    double v;
    try {
      v = std::stod(tok, &used);
    } catch (const std::exception&) {
      throw ConfigError(fmt::format("{}: '{}' is not a number", key, tok));
    }
    if (used != tok.size()) throw ConfigError(fmt::format("{}: '{}' is not a number", key, tok));
    out.push_back(v);
  }
  return out;
}

template <class T>
T num(const pt::ptree& t, const std::string& key, T fallback) {
  auto v = t.get_optional<std::string>(key);
  if (!v) return fallback;
  try {
    std::size_t used = 0;
    T out;
    if constexpr (std::is_floating_point_v<T>)
      out = T(std::stod(*v, &used));
    else
      out = T(std::stoll(*v, &used));
    if (used != v->size()) throw std::invalid_argument("trailing");
    return out;
  } catch (const std::exception&) {
    throw ConfigError(fmt::format("{}: '{}' is not a valid number", key, *v));
  }
}

}  // namespace

SystemSpec RunConfig::make_spec() const { return make_system(system, params, c_vector()); }

Vec RunConfig::c_vector() const {
  if (c.empty() || c.size() > 2) throw ConfigError("c needs one or two components");
  return {c[0], c.size() > 1 ? c[1] : 0.0};
}

Vec RunConfig::start_vector() const {
  if (start.empty() || start.size() > 2) throw ConfigError("start needs one or two components");
  return {start[0], start.size() > 1 ? start[1] : 0.0};
}

void RunConfig::validate() const {
  for (auto [name, v] : {std::pair{"tol_alpha", tol_alpha}, {"tol_fix", tol_fix}, {"sing_factor", sing_factor},
                         {"crit_ratio", crit_ratio}, {"cluster_cells", cluster_cells}, {"tol_aubry", tol_aubry},
                         {"tol_cal", tol_cal}, {"horizon", horizon}, {"chain_time", chain_time}, {"t_max", t_max},
                         {"epsilon", epsilon}})
    if (!(v > 0)) throw ConfigError(fmt::format("{} must be strictly positive", name));
  if (grid < 0 || tau < 0 || flow_step < 0 || chain_cells < 0 || chain_epsilon < 0 || barrier_grid < 0)
    throw ConfigError("grid sizes and steps must be non-negative");
  if (twist_q < 1) throw ConfigError("twist q must be at least 1");
  const auto spec = make_spec();
  if (c.size() != std::size_t(spec.dim()) && !(c.size() == 1 && spec.dim() == 1))
    throw ConfigError(fmt::format("c has {} components for a {}-dimensional system", c.size(), spec.dim()));
  if (tau > 0 && tau > t0_estimate(spec) * (1 + 1e-12))
    throw ConfigError(fmt::format("tau = {} exceeds t0 = {}", tau, t0_estimate(spec)));
  if (flow_method != "intrinsic" && flow_method != "selection-ode") throw ConfigError("flow method must be intrinsic or selection-ode");
}

std::string RunConfig::serialize() const {
  pt::ptree t;
  t.put("system.name", system);
  t.put("system.params", join(params));
  t.put("system.c", join(c));
  t.put("grid.n", grid);
  t.put("grid.tau", format_double(tau));
  t.put("tolerances.tol_alpha", format_double(tol_alpha));
  t.put("tolerances.tol_fix", format_double(tol_fix));
  t.put("tolerances.sing_factor", format_double(sing_factor));
  t.put("tolerances.crit_ratio", format_double(crit_ratio));
  t.put("tolerances.cluster_cells", format_double(cluster_cells));
  t.put("tolerances.tol_aubry", format_double(tol_aubry));
  t.put("tolerances.tol_cal", format_double(tol_cal));
  t.put("flow.method", flow_method);
  t.put("flow.step", format_double(flow_step));
  t.put("flow.horizon", format_double(horizon));
  t.put("flow.start", join(start));
  t.put("conley.cells", chain_cells);
  t.put("conley.epsilon", format_double(chain_epsilon));
  t.put("conley.time", format_double(chain_time));
  t.put("aubry.t_max", format_double(t_max));
  t.put("aubry.grid", barrier_grid);
  t.put("twist.k", format_double(twist_k));
  t.put("twist.p", twist_p);
  t.put("twist.q", twist_q);
  t.put("twist.omega", format_double(omega));
  t.put("twist.resolution", gf_resolution);
  t.put("twist.epsilon", format_double(epsilon));
  t.put("run.output", output);
  t.put("run.cache", cache);
  t.put("run.seed", seed);
  std::ostringstream out;
  pt::write_ini(out, t);
  return out.str();
}

RunConfig RunConfig::parse(const std::string& text) {
  pt::ptree t;
  std::istringstream in(text);
  try {
    pt::read_ini(in, t);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  static const std::map<std::string, std::vector<std::string>> known = {
      {"system", {"name", "params", "c"}},
      {"grid", {"n", "tau"}},
      {"tolerances", {"tol_alpha", "tol_fix", "sing_factor", "crit_ratio", "cluster_cells", "tol_aubry", "tol_cal"}},
      {"flow", {"method", "step", "horizon", "start"}},
      {"conley", {"cells", "epsilon", "time"}},
      {"aubry", {"t_max", "grid"}},
      {"twist", {"k", "p", "q", "omega", "resolution", "epsilon"}},
      {"run", {"output", "cache", "seed"}}};
  for (const auto& [section, body] : t) {
    auto it = known.find(section);
    if (it == known.end()) throw ConfigError("config: unknown section [" + section + "]");
    for (const auto& [key, _] : body)
      if (std::find(it->second.begin(), it->second.end(), key) == it->second.end())
        throw ConfigError("config: unknown key " + section + "." + key);
  }
  RunConfig r;
  r.system = t.get("system.name", r.system);
  if (auto v = t.get_optional<std::string>("system.params")) r.params = split(*v, "system.params");
  if (auto v = t.get_optional<std::string>("system.c")) r.c = split(*v, "system.c");
  r.grid = num(t, "grid.n", r.grid);
  r.tau = num(t, "grid.tau", r.tau);
  r.tol_alpha = num(t, "tolerances.tol_alpha", r.tol_alpha);
  r.tol_fix = num(t, "tolerances.tol_fix", r.tol_fix);
  r.sing_factor = num(t, "tolerances.sing_factor", r.sing_factor);
  r.crit_ratio = num(t, "tolerances.crit_ratio", r.crit_ratio);
  r.cluster_cells = num(t, "tolerances.cluster_cells", r.cluster_cells);
  r.tol_aubry = num(t, "tolerances.tol_aubry", r.tol_aubry);
  r.tol_cal = num(t, "tolerances.tol_cal", r.tol_cal);
  r.flow_method = t.get("flow.method", r.flow_method);
  r.flow_step = num(t, "flow.step", r.flow_step);
  r.horizon = num(t, "flow.horizon", r.horizon);
  if (auto v = t.get_optional<std::string>("flow.start")) r.start = split(*v, "flow.start");
  r.chain_cells = num(t, "conley.cells", r.chain_cells);
  r.chain_epsilon = num(t, "conley.epsilon", r.chain_epsilon);
  r.chain_time = num(t, "conley.time", r.chain_time);
  r.t_max = num(t, "aubry.t_max", r.t_max);
  r.barrier_grid = num(t, "aubry.grid", r.barrier_grid);
  r.twist_k = num(t, "twist.k", r.twist_k);
  r.twist_p = num(t, "twist.p", r.twist_p);
  r.twist_q = num(t, "twist.q", r.twist_q);
  r.omega = num(t, "twist.omega", r.omega);
  r.gf_resolution = num(t, "twist.resolution", r.gf_resolution);
  r.epsilon = num(t, "twist.epsilon", r.epsilon);
  r.output = t.get("run.output", r.output);
  r.cache = t.get("run.cache", r.cache);
  r.seed = num(t, "run.seed", r.seed);
  return r;
}

RunConfig RunConfig::load(const std::string& path) { return parse(read_text(path)); }

std::string RunConfig::solution_hash() const {
  const auto spec = make_spec();
  return sha256_hex(fmt::format("{}|{}|{}|{}|{}|{}", spec.identity(), join(c), grid, format_double(tau),
                                format_double(tol_alpha), format_double(tol_fix)));
}

std::string RunConfig::full_hash() const {
  RunConfig copy = *this;
  copy.output.clear();
  copy.cache.clear();
  return sha256_hex(copy.serialize());
}

}  // namespace wkam
