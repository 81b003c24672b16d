#include "wkam/acceptance.hpp"
#include "wkam/action.hpp"
#include "wkam/aubry.hpp"
#include "wkam/semiflow.hpp"
#include "wkam/twist.hpp"
#include "wkam/weakkam.hpp"

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>

namespace py = pybind11;
using namespace wkam;

namespace {

Vec to_vec(const std::vector<double>& v) {
  if (v.empty() || v.size() > 2) throw ConfigError("points need one or two components");
  return {v[0], v.size() > 1 ? v[1] : 0.0};
}

py::array_t<double> coords(const std::vector<Vec>& pts, int dim) {
  py::array_t<double> out({py::ssize_t(pts.size()), py::ssize_t(dim)});
  auto w = out.mutable_unchecked<2>();
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (int d = 0; d < dim; ++d) w(i, d) = pts[i][d];
  return out;
}

// One weak KAM solve with its superdifferential analysis and semiflow.
class Solution {
 public:
  Solution(const std::string& name, const std::vector<double>& params, const std::vector<double>& c, int grid)
      : spec_(make_system(name, params, to_vec(c))) {
    TorusGeometry g(spec_.dim(), grid > 0 ? grid : default_grid(spec_.dim()));
    LaxOleinik lo(spec_, g);
    result_ = weak_kam_solution(lo, spec_.c());
    sd_ = std::make_unique<SuperdiffAnalysis>(result_.u, spec_);
    flow_ = std::make_unique<Semiflow>(*sd_, result_.alpha);
  }

  double alpha() const { return result_.alpha; }
  bool converged() const { return result_.converged; }
  int iterations() const { return result_.iterations; }
  double residual() const { return result_.residual; }
  int dim() const { return spec_.dim(); }

  py::array_t<double> values() const {
    const auto& g = result_.u.geometry();
    std::vector<py::ssize_t> shape{g.n()};
    if (g.dim() == 2) shape = {g.n(), g.n()};  // [j, i]: row index is the second coordinate
    py::array_t<double> out(shape);
    std::copy(result_.u.values().begin(), result_.u.values().end(), out.mutable_data());
    return out;
  }

  py::array singular_mask() const {
    std::vector<char> mask(result_.u.size());
    for (std::size_t k = 0; k < mask.size(); ++k) mask[k] = sd_->singular(k);
    return py::array(py::dtype("?"), {py::ssize_t(mask.size())}, {py::ssize_t(1)}, mask.data());
  }

  py::array_t<double> critical_points() const { return coords(sd_->critical_points(), dim()); }

  double value(const std::vector<double>& x) const { return result_.u(to_vec(x)); }

  py::dict integrate(const std::vector<double>& x0, double horizon, double tau, const std::string& method) {
    if (tau <= 0) tau = default_flow_step(spec_);
    auto tr = flow_->integrate(to_vec(x0), horizon, tau, parse_flow_method(method));
    py::dict d;
    d["t"] = py::array_t<double>(py::ssize_t(tr.times.size()), tr.times.data());
    d["x"] = coords(tr.lift, dim());
    d["p"] = coords(tr.selected_p, dim());
    d["v"] = py::array_t<double>(py::ssize_t(tr.v_values.size()), tr.v_values.data());
    auto om = omega_limit(tr, result_.u.geometry(), 0.5, flow_->cluster_tol());
    d["omega"] = to_string(om.kind);
    return d;
  }

 private:
  SystemSpec spec_;
  WeakKamResult result_;
  std::unique_ptr<SuperdiffAnalysis> sd_;
  std::unique_ptr<Semiflow> flow_;
};

}  // namespace

PYBIND11_MODULE(_wkam, m) {
  m.doc() = "weak KAM solver bindings";

  py::register_exception<ConvergenceError>(m, "ConvergenceError");
  py::register_exception<InvariantError>(m, "InvariantError");
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  m.def("systems", &registered_systems);

  m.def(
      "alpha",
      [](const std::string& name, const std::vector<double>& c, const std::vector<double>& params, int grid) {
        auto spec = make_system(name, params);
        return compute_alpha(spec, to_vec(c), grid);
      },
      py::arg("system"), py::arg("c"), py::arg("params") = std::vector<double>{}, py::arg("grid") = 0);

  m.def(
      "action",
      [](const std::string& name, const std::vector<double>& x, const std::vector<double>& y, double t,
         const std::vector<double>& params) {
        auto spec = make_system(name, params);
        return fundamental_solution(spec, to_vec(x), to_vec(y), t, 0.0).action;
      },
      py::arg("system"), py::arg("x"), py::arg("y"), py::arg("t"), py::arg("params") = std::vector<double>{},
      "Minimal action between two lift points in time t at zero cohomology.");

  m.def(
      "peierls_barrier",
      [](const std::string& name, const std::vector<double>& x, const std::vector<double>& y, double alpha) {
        return wkam::peierls_barrier(make_system(name), to_vec(x), to_vec(y), alpha);
      },
      py::arg("system"), py::arg("x"), py::arg("y"), py::arg("alpha") = 0.0);

  m.def(
      "standard_map_orbit",
      [](double k, long p, long q) {
        auto cfg = minimal_periodic_config(GeneratingFunction::standard_map(k), p, q);
        py::dict d;
        d["first"] = cfg.first;
        d["x"] = py::array_t<double>(py::ssize_t(cfg.x.size()), cfg.x.data());
        d["action"] = cfg.action;
        d["rotation_number"] = rotation_number(cfg);
        return d;
      },
      py::arg("k"), py::arg("p"), py::arg("q"));

  m.def(
      "run_criterion",
      [](int id) {
        CriterionResult r;
        {
          py::gil_scoped_release release;
          r = wkam::run_criterion(id);
        }
        py::dict metrics;
        for (const auto& [k, v] : r.metrics) metrics[py::str(k)] = v;
        py::dict d;
        d["id"] = r.id;
        d["title"] = r.title;
        d["pass"] = r.pass;
        d["seconds"] = r.seconds;
        d["metrics"] = metrics;
        d["note"] = r.note;
        return d;
      },
      py::arg("id"));

  py::class_<Solution>(m, "Solution")
      .def(py::init<const std::string&, const std::vector<double>&, const std::vector<double>&, int>(),
           py::arg("system"), py::arg("params") = std::vector<double>{}, py::arg("c") = std::vector<double>{0.0},
           py::arg("grid") = 0)
      .def_property_readonly("alpha", &Solution::alpha)
      .def_property_readonly("converged", &Solution::converged)
      .def_property_readonly("iterations", &Solution::iterations)
      .def_property_readonly("residual", &Solution::residual)
      .def_property_readonly("dim", &Solution::dim)
      .def("values", &Solution::values)
      .def("__call__", &Solution::value, py::arg("x"))
      .def("singular_mask", &Solution::singular_mask)
      .def("critical_points", &Solution::critical_points)
      .def("integrate", &Solution::integrate, py::arg("x0"), py::arg("horizon"), py::arg("tau") = 0.0,
           py::arg("method") = "intrinsic");
}
