#include "wkam/acceptance.hpp"
#include "wkam/aubry.hpp"
#include "wkam/cache.hpp"
#include "wkam/config.hpp"
#include "wkam/conley.hpp"
#include "wkam/io.hpp"
#include "wkam/semiflow.hpp"
#include "wkam/twist.hpp"
#include "wkam/weakkam.hpp"

#include <CLI11.hpp>
#include <json.hpp>
#include <fmt/format.h>

#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace wkam;

namespace {

// Flags shared by all commands; unset flags leave the config file value alone.
struct Overrides {
  std::string config_path;
  std::string system;
  std::vector<double> params, c, start;
  int grid = -1;
  double tau = -1, horizon = -1, step = -1;
  std::string method, output, cache;
  double k = NAN, omega = NAN, epsilon = NAN;
  long p = 0, q = 0;
  bool no_compute = false;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config_path, "INI configuration file")->check(CLI::ExistingFile);
  cmd->add_option("--system", o.system, "system name");
  cmd->add_option("--params", o.params, "system parameters");
  cmd->add_option("--c", o.c, "cohomology class (one value per dimension)");
  cmd->add_option("--grid", o.grid, "nodes per axis (0: default)");
  cmd->add_option("--tau", o.tau, "Lax-Oleinik step (0: default)");
  cmd->add_option("--output,-o", o.output, "output directory");
  cmd->add_option("--cache", o.cache, "cache directory");
  cmd->add_flag("--no-compute", o.no_compute, "fail instead of computing missing prerequisites");
}

RunConfig make_config(const Overrides& o) {
  RunConfig cfg = o.config_path.empty() ? RunConfig{} : RunConfig::load(o.config_path);
  if (!o.system.empty()) cfg.system = o.system;
  if (!o.params.empty()) cfg.params = o.params;
  if (!o.c.empty()) cfg.c = o.c;
  if (!o.start.empty()) cfg.start = o.start;
  if (o.grid >= 0) cfg.grid = o.grid;
  if (o.tau >= 0) cfg.tau = o.tau;
  if (o.horizon >= 0) cfg.horizon = o.horizon;
  if (o.step >= 0) cfg.flow_step = o.step;
  if (!o.method.empty()) cfg.flow_method = o.method;
  if (!o.output.empty()) cfg.output = o.output;
  if (!o.cache.empty()) cfg.cache = o.cache;
  if (!std::isnan(o.k)) cfg.twist_k = o.k;
  if (!std::isnan(o.omega)) cfg.omega = o.omega;
  if (!std::isnan(o.epsilon)) cfg.epsilon = o.epsilon;
  if (o.p != 0) cfg.twist_p = o.p;
  if (o.q != 0) cfg.twist_q = o.q;
  // A single scalar c on a 2D system means (c, 0).
  if (cfg.c.size() == 1 && make_system(cfg.system, cfg.params).dim() == 2) cfg.c.push_back(0.0);
  cfg.validate();
  return cfg;
}

class Run {
 public:
  Run(RunConfig cfg, bool no_compute, std::string command)
      : cfg_(std::move(cfg)), no_compute_(no_compute), command_(std::move(command)), hash_(cfg_.full_hash()),
        out_(cfg_.output), cache_(Cache::resolve_root(cfg_.cache)) {
    fs::create_directories(out_);
    put_text("config.ini", cfg_.serialize());
  }

  const RunConfig& cfg() const { return cfg_; }
  const std::string& hash() const { return hash_; }
  std::string comment() const { return "config_hash=" + hash_; }
  fs::path path(const std::string& name) {
    files_.push_back(name);
    return out_ / name;
  }
  void put_text(const std::string& name, const std::string& text) { write_text_atomic(path(name), text); }
  void put_json(const std::string& name, json j) {
    j["config_hash"] = hash_;
    put_text(name, j.dump(2) + "\n");
  }

  struct Solution {
    ScalarField u;
    double alpha;
    json meta;
  };

  // The weak KAM solution for the configured system, from the cache when present.
  const Solution& solution() {
    if (solution_) return *solution_;
    const std::string key = "solve-" + cfg_.solution_hash();
    if (no_compute_ && !cache_.contains(key))
      throw ConfigError(fmt::format("missing prerequisite: no cached solution for this config (run `wkam solve` first, "
                                    "cache {})",
                                    cache_.root().string()));
    const fs::path entry = cache_.get_or_create(key, [&](const fs::path& dir) {
      auto spec = cfg_.make_spec();
      TorusGeometry g(spec.dim(), cfg_.grid > 0 ? cfg_.grid : default_grid(spec.dim()));
      LaxOleinik lo(spec, g, cfg_.tau);
      WeakKamOptions opts;
      opts.tol_alpha = cfg_.tol_alpha;
      opts.tol_fix = cfg_.tol_fix;
      auto r = weak_kam_solution(lo, cfg_.c_vector(), opts);
      json meta = {{"system", spec.name()},       {"params", spec.params()},   {"c", cfg_.c},
                   {"grid", g.n()},               {"dim", g.dim()},            {"tau", lo.tau()},
                   {"alpha", r.alpha},            {"alpha_lower", r.alpha_lower}, {"alpha_upper", r.alpha_upper},
                   {"residual", r.residual},      {"iterations", r.iterations}, {"converged", r.converged},
                   {"solution_hash", cfg_.solution_hash()}};
      if (!r.converged) {
        std::ostringstream tail;
        for (double v : r.residual_tail) tail << ' ' << format_double(v);
        throw ConvergenceError(fmt::format("weak KAM iteration did not converge after {} steps: residual {:.3e}, "
                                           "alpha bracket [{:.9g}, {:.9g}], recent residuals:{}",
                                           r.iterations, r.residual, r.alpha_lower, r.alpha_upper, tail.str()));
      }
      write_field(dir / "u.grid", r.u, r.alpha, key_prefix(cfg_.solution_hash()), "u_c");
      write_text_atomic(dir / "solution.json", meta.dump(2) + "\n");
    });
    double alpha = 0.0;
    ScalarField u = read_field(entry / "u.grid", &alpha);
    solution_ = Solution{std::move(u), alpha, json::parse(read_text(entry / "solution.json"))};
    return *solution_;
  }

  SuperdiffAnalysis& analysis() {
    if (!analysis_) {
      SuperdiffOptions o;
      o.sing_factor = cfg_.sing_factor;
      o.crit_ratio = cfg_.crit_ratio;
      analysis_ = std::make_unique<SuperdiffAnalysis>(solution().u, cfg_.make_spec(), o);
    }
    return *analysis_;
  }

  Semiflow& flow() {
    if (!flow_) {
      FlowOptions o;
      o.cluster_cells = cfg_.cluster_cells;
      flow_ = std::make_unique<Semiflow>(analysis(), solution().alpha, o);
    }
    return *flow_;
  }

  double flow_step() { return cfg_.flow_step > 0 ? cfg_.flow_step : default_flow_step(cfg_.make_spec()); }

  void finish() {
    json files = json::object();
    for (const auto& f : files_) files[f] = sha256_hex(read_text(out_ / f));
    json m = {{"command", command_}, {"config_hash", hash_}, {"files", files}};
    write_text_atomic(out_ / "manifest.json", m.dump(2) + "\n");
  }

 private:
  RunConfig cfg_;
  bool no_compute_;
  std::string command_, hash_;
  fs::path out_;
  Cache cache_;
  std::vector<std::string> files_;
  std::optional<Solution> solution_;
  std::unique_ptr<SuperdiffAnalysis> analysis_;
  std::unique_ptr<Semiflow> flow_;
};

json vec_json(const Vec& x, int dim) { return dim == 1 ? json::array({x[0]}) : json::array({x[0], x[1]}); }

std::vector<std::string> coord_columns(int dim) { return dim == 1 ? std::vector<std::string>{"x"} : std::vector<std::string>{"x", "y"}; }

void put_coords(CsvWriter& w, const Vec& x, int dim) {
  w << x[0];
  if (dim == 2) w << x[1];
}

int cmd_solve(Run& run) {
  const auto& s = run.solution();
  run.put_text("alpha.txt", format_double(s.alpha) + "\n");
  write_field(run.path("u.grid"), s.u, s.alpha, key_prefix(run.hash()), "u_c");
  run.put_json("solution.json", s.meta);
  std::cout << fmt::format("alpha = {}\n", format_double(s.alpha));
  return 0;
}

int cmd_flow(Run& run) {
  auto& flow = run.flow();
  const int dim = flow.geometry().dim();
  const double tau = run.flow_step();
  const FlowMethod m = parse_flow_method(run.cfg().flow_method);
  auto tr = flow.integrate(run.cfg().start_vector(), run.cfg().horizon, tau, m);
  std::string lines = json{{"config_hash", run.hash()}, {"method", to_string(m)}, {"step", tau}}.dump() + "\n";
  for (std::size_t i = 0; i < tr.size(); ++i)
    lines += json{{"t", tr.times[i]}, {"x", vec_json(tr.lift[i], dim)}, {"p", vec_json(tr.selected_p[i], dim)},
                  {"v", tr.v_values[i]}}.dump() + "\n";
  run.put_text("trajectory.jsonl", lines);
  auto om = omega_limit(tr, flow.geometry(), 0.5, flow.cluster_tol());
  json support = json::array();
  for (const auto& x : om.support) support.push_back(vec_json(x, dim));
  json j = {{"kind", to_string(om.kind)}, {"support", support}, {"closure_error", om.closure_error}};
  j["period_estimate"] = om.period_estimate ? json(*om.period_estimate) : json(nullptr);
  j["sigma_gap"] = om.sigma_gap ? json(*om.sigma_gap) : json(nullptr);
  run.put_json("omega.json", j);
  std::cout << fmt::format("{} steps, omega-limit: {}\n", tr.size() - 1, to_string(om.kind));
  return 0;
}

int cmd_sing(Run& run) {
  auto& sd = run.analysis();
  const auto& g = sd.field().geometry();
  std::vector<long> component(g.size(), -1);
  auto comps = sd.singular_components();
  for (std::size_t i = 0; i < comps.size(); ++i)
    for (auto k : comps[i].cells) component[k] = long(i);
  auto cols = coord_columns(g.dim());
  cols.insert(cols.end(), {"diameter", "is_singular", "is_critical", "component"});
  CsvWriter w(run.path("sing.csv"), cols, run.comment());
  for (std::size_t k = 0; k < g.size(); ++k) {
    put_coords(w, g.node(k), g.dim());
    w << sd.node_set(k).diameter() << sd.singular(k) << sd.critical(k) << component[k];
    w.end_row();
  }
  w.close();
  json list = json::array();
  for (std::size_t i = 0; i < comps.size(); ++i)
    list.push_back({{"id", i}, {"size", comps[i].cells.size()}, {"unbounded", comps[i].meets_window_boundary},
                    {"contains_critical", comps[i].contains_critical}});
  run.put_json("components.json", {{"sing_tol", sd.sing_tol()}, {"components", list}});
  std::cout << fmt::format("{} singular nodes in {} components\n", sd.singular_count(), comps.size());
  return 0;
}

int cmd_crit(Run& run) {
  auto& sd = run.analysis();
  const auto& g = sd.field().geometry();
  auto cols = coord_columns(g.dim());
  cols.push_back("u");
  CsvWriter w(run.path("crit.csv"), cols, run.comment());
  auto pts = sd.critical_points();
  for (const auto& x : pts) {
    put_coords(w, x, g.dim());
    w << sd.field()(x);
    w.end_row();
  }
  w.close();
  CsvWriter hv(run.path("critical_values.csv"), {"value", "multiplicity"}, run.comment());
  for (auto [v, m] : critical_values_histogram(sd)) {
    hv << v << m;
    hv.end_row();
  }
  hv.close();
  std::cout << fmt::format("{} critical points\n", pts.size());
  return 0;
}

int cmd_conley(Run& run) {
  auto& flow = run.flow();
  ChainOptions o;
  o.cells_per_period = run.cfg().chain_cells;
  o.epsilon = run.cfg().chain_epsilon;
  o.T = run.cfg().chain_time;
  o.tau = run.cfg().flow_step;
  if (run.cfg().flow_method == "intrinsic") o.method = FlowMethod::intrinsic;
  SampledFlowMap phi(flow, o);
  auto g = build_chain_graph(phi, o);
  std::string edges = "# " + run.comment() + "\n";
  for (const auto& e : g.edges) edges += fmt::format("{} {} {}\n", e.from, e.to, format_double(e.dist));
  run.put_text("edges.txt", edges);
  auto cr = chain_recurrent_set(g);
  auto cols = coord_columns(g.dim);
  cols.insert(cols.begin(), "cell");
  CsvWriter w(run.path("recurrent.csv"), cols, run.comment());
  for (auto c : cr) {
    w << c;
    put_coords(w, g.center(c), g.dim);
    w.end_row();
  }
  w.close();
  auto crit = cells_containing(g, run.analysis().critical_points());
  const double hd = cell_hausdorff(g, cr, crit);
  run.put_json("conley.json", {{"cells", g.cell_count()},
                               {"edges", g.edges.size()},
                               {"epsilon", g.epsilon},
                               {"recurrent_cells", cr.size()},
                               {"critical_cells", crit.size()},
                               {"hausdorff_cells", std::isfinite(hd) ? json(hd) : json(nullptr)}});
  std::cout << fmt::format("{} chain-recurrent cells, {} critical cells\n", cr.size(), crit.size());
  return 0;
}

int cmd_aubry(Run& run) {
  const double alpha = run.solution().alpha;
  AubryOptions o;
  o.grid = run.cfg().barrier_grid;
  o.tol_aubry = run.cfg().tol_aubry;
  o.barrier.t_max = run.cfg().t_max;
  auto spec = run.cfg().make_spec();
  auto a = aubry_set(spec, alpha, o);
  const auto& g = a.table.geometry;
  auto cols = coord_columns(g.dim());
  auto diag_cols = cols;
  diag_cols.insert(diag_cols.begin(), "source");
  diag_cols.push_back("barrier");
  CsvWriter d(run.path("barrier_diag.csv"), diag_cols, run.comment());
  for (std::size_t s = 0; s < a.table.sources.size(); ++s) {
    d << s;
    put_coords(d, g.node(a.table.sources[s]), g.dim());
    d << a.table.diagonal(s);
    d.end_row();
  }
  d.close();
  CsvWriter w(run.path("aubry.csv"), cols, run.comment());
  for (const auto& x : a.points) {
    put_coords(w, x, g.dim());
    w.end_row();
  }
  w.close();
  std::cout << fmt::format("{} Aubry points (source spacing {})\n", a.points.size(), format_double(a.cell));
  return 0;
}

int cmd_twist(Run& run) {
  const auto& cfg = run.cfg();
  auto h = GeneratingFunction::standard_map(cfg.twist_k);
  auto conf = minimal_periodic_config(h, cfg.twist_p, cfg.twist_q);
  CsvWriter w(run.path("config.csv"), {"i", "x_i"}, run.comment());
  for (long i = conf.first; i <= conf.last(); ++i) {
    w << i << conf.at(i);
    w.end_row();
  }
  w.close();
  run.put_json("twist.json", {{"k", cfg.twist_k},
                              {"p", conf.p},
                              {"q", conf.q},
                              {"action", conf.action},
                              {"rotation_number", rotation_number(conf)},
                              {"residual", conf.residual}});
  std::cout << fmt::format("({}, {}) action {} rotation {}\n", conf.p, conf.q, format_double(conf.action),
                           format_double(rotation_number(conf)));
  return conf.residual <= 1e-8 ? 0 : int(ExitCode::non_convergence);
}

int cmd_report(Run& run, const std::string& suite, const std::vector<int>& only) {
  if (suite != "paper") throw ConfigError("unknown suite '" + suite + "' (available: paper)");
  json list = json::array();
  std::string text;
  bool all = true;
  for (const auto& c : acceptance_criteria()) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    auto r = run_criterion(c.id);
    all &= r.pass;
    json metrics = json::object();
    for (const auto& [k, v] : r.metrics) metrics[k] = std::isfinite(v) ? json(v) : json(nullptr);
    list.push_back({{"id", r.id}, {"title", r.title}, {"pass", r.pass}, {"metrics", metrics}, {"note", r.note}});
    const std::string line = fmt::format("{} criterion {:>2} {}{}\n", r.pass ? "PASS" : "FAIL", r.id, r.title,
                                         r.note.empty() ? "" : " (" + r.note + ")");
    std::cout << line << std::flush;
    text += line;
  }
  run.put_json("report.json", {{"suite", suite}, {"all_pass", all}, {"criteria", list}});
  run.put_text("report.txt", text);
  return all ? 0 : int(ExitCode::invariant_violation);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"weak KAM solutions, generalized characteristics and Aubry-Mather diagnostics"};
  app.require_subcommand(1);
  Overrides o;
  std::string suite = "paper";
  std::vector<int> only;
  std::map<std::string, CLI::App*> cmds;
  for (const char* name : {"solve", "flow", "sing", "crit", "conley", "aubry", "twist", "report"}) {
    auto* cmd = app.add_subcommand(name);
    add_common(cmd, o);
    cmds[name] = cmd;
  }
  for (auto* cmd : {cmds["flow"], cmds["conley"]}) {
    cmd->add_option("--method", o.method, "intrinsic | selection-ode");
    cmd->add_option("--step", o.step, "flow step (0: default)");
  }
  cmds["flow"]->add_option("--start", o.start, "initial point");
  cmds["flow"]->add_option("--horizon", o.horizon, "integration time");
  cmds["twist"]->add_option("--k", o.k, "standard map parameter");
  cmds["twist"]->add_option("--p", o.p, "rotation numerator");
  cmds["twist"]->add_option("--q", o.q, "rotation denominator");
  cmds["report"]->add_option("--suite", suite, "check suite");
  cmds["report"]->add_option("--criteria", only, "run only these criterion ids")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : int(ExitCode::bad_config);
  }
  try {
    const std::string name = app.get_subcommands().front()->get_name();
    Run run(make_config(o), o.no_compute, name);
    int code = 0;
    if (name == "solve") code = cmd_solve(run);
    else if (name == "flow") code = cmd_flow(run);
    else if (name == "sing") code = cmd_sing(run);
    else if (name == "crit") code = cmd_crit(run);
    else if (name == "conley") code = cmd_conley(run);
    else if (name == "aubry") code = cmd_aubry(run);
    else if (name == "twist") code = cmd_twist(run);
    else code = cmd_report(run, suite, only);
    run.finish();
    return code;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return int(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return int(ExitCode::bad_config);
  }
}
