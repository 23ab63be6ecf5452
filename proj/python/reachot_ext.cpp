#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "reachot/config.hpp"
#include "reachot/experiment.hpp"
#include "reachot/objective.hpp"
#include "reachot/optimizer.hpp"
#include "reachot/sampling.hpp"

namespace py = pybind11;
using namespace reachot;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

std::vector<double> flat(const Array& a) { return {a.data(), a.data() + a.size()}; }

Array to_array(const std::vector<double>& v, std::vector<py::ssize_t> shape) {
  Array out(shape);
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

std::size_t require_2d(const Array& a, const char* what) {
  if (a.ndim() != 2) throw std::invalid_argument(std::string(what) + " must be a 2-D array");
  return static_cast<std::size_t>(a.shape(1));
}

ParticleEnsemble make_ensemble(const Array& x0s, const Array& controls) {
  const std::size_t d = require_2d(x0s, "x0s");
  if (controls.ndim() != 3 || controls.shape(0) != x0s.shape(0)) {
    throw std::invalid_argument("controls must have shape (N, steps, m) matching x0s");
  }
  const auto steps = static_cast<std::size_t>(controls.shape(1));
  const auto m = static_cast<std::size_t>(controls.shape(2));
  ParticleEnsemble ens;
  ens.state_dim = d;
  ens.x0s = flat(x0s);
  const double* src = controls.data();
  for (py::ssize_t i = 0; i < controls.shape(0); ++i) {
    DiscretizedControl c(steps, m);
    std::copy_n(src + i * steps * m, steps * m, c.values.begin());
    ens.controls.push_back(std::move(c));
  }
  return ens;
}

py::dict breakdown_dict(const ObjectiveBreakdown& b) {
  py::dict d;
  d["control_energy"] = b.control_energy;
  d["interaction_energy"] = b.interaction_energy;
  d["total"] = b.total;
  d["epsilon"] = b.epsilon;
  return d;
}

py::tuple ensemble_arrays(const ParticleEnsemble& ens) {
  const auto n = static_cast<py::ssize_t>(ens.size());
  const auto steps = static_cast<py::ssize_t>(ens.controls.front().steps);
  const auto m = static_cast<py::ssize_t>(ens.controls.front().dim);
  std::vector<double> u;
  for (const auto& c : ens.controls) u.insert(u.end(), c.values.begin(), c.values.end());
  return py::make_tuple(to_array(ens.x0s, {n, static_cast<py::ssize_t>(ens.state_dim)}),
                        to_array(u, {n, steps, m}));
}

ExperimentConfig config_from_text(const std::string& text) {
  return config_from_json(nlohmann::json::parse(text));
}

// Problem bundles a system, time grid and kernel into an Objective.
struct Problem {
  Objective objective;
};

Problem make_problem(const std::string& system, const ParamMap& params, double horizon,
                     std::size_t steps, const std::string& scheme, const std::string& family,
                     double delta, double epsilon, std::size_t threads) {
  auto sys = make_system(system, params);
  KernelSpec kernel(kernel_family_from_string(family), delta, sys->state_dim());
  return Problem{Objective(sys, TimeGrid(horizon, steps), scheme_from_string(scheme), kernel, epsilon,
                           Execution{threads, Reduction::deterministic})};
}

}  // namespace

PYBIND11_MODULE(_reachot, m) {
  m.doc() = "Particle optimal-transport sampling of reachable sets";

  m.def("version", &version_string);
  m.def("systems", &registered_systems);

  m.def(
      "rhs",
      [](const std::string& name, const Array& x, const Array& u, const ParamMap& params) {
        auto sys = make_system(name, params);
        return to_array(sys->rhs(flat(x), flat(u)), {static_cast<py::ssize_t>(sys->state_dim())});
      },
      py::arg("system"), py::arg("x"), py::arg("u"), py::arg("params") = ParamMap{});

  m.def(
      "kernel",
      [](const std::string& family, double delta, const Array& z) {
        KernelSpec k(kernel_family_from_string(family), delta, static_cast<std::size_t>(z.size()));
        return k.interaction(flat(z));
      },
      py::arg("family"), py::arg("delta"), py::arg("z"));

  m.def(
      "kernel_grad",
      [](const std::string& family, double delta, const Array& z) {
        KernelSpec k(kernel_family_from_string(family), delta, static_cast<std::size_t>(z.size()));
        return to_array(k.interaction_grad(flat(z)), {z.size()});
      },
      py::arg("family"), py::arg("delta"), py::arg("z"));

  m.def(
      "interaction_energy",
      [](const Array& points, const std::string& family, double delta, double epsilon) {
        const std::size_t d = require_2d(points, "points");
        return interaction_energy(flat(points), KernelSpec(kernel_family_from_string(family), delta, d),
                                  epsilon);
      },
      py::arg("points"), py::arg("family"), py::arg("delta"), py::arg("epsilon"));

  m.def(
      "wasserstein1_1d",
      [](const Array& points, double a, double b) { return wasserstein1_1d(flat(points), a, b); },
      py::arg("points"), py::arg("a"), py::arg("b"));

  py::class_<Problem>(m, "Problem")
      .def(py::init(&make_problem), py::arg("system"), py::arg("params") = ParamMap{},
           py::arg("horizon") = 15.0, py::arg("steps") = 1500, py::arg("scheme") = "rk4",
           py::arg("family") = "gaussian", py::arg("delta") = 0.2, py::arg("epsilon") = 0.05,
           py::arg("threads") = 1)
      .def_property_readonly("state_dim", [](const Problem& p) { return p.objective.system().state_dim(); })
      .def_property_readonly("control_dim",
                             [](const Problem& p) { return p.objective.system().control_dim(); })
      .def_property_readonly("steps", [](const Problem& p) { return p.objective.grid().steps; })
      .def(
          "evaluate",
          [](const Problem& p, const Array& x0s, const Array& controls) {
            const auto ens = make_ensemble(x0s, controls);
            Evaluation ev;
            {
              py::gil_scoped_release release;
              ev = p.objective.evaluate(ens);
            }
            py::dict out = breakdown_dict(ev.breakdown);
            out["terminals"] = to_array(ev.terminals, {static_cast<py::ssize_t>(ens.size()),
                                                       static_cast<py::ssize_t>(ens.state_dim)});
            return out;
          },
          py::arg("x0s"), py::arg("controls"))
      .def(
          "gradient",
          [](const Problem& p, const Array& x0s, const Array& controls) {
            const auto ens = make_ensemble(x0s, controls);
            EnsembleGradient g;
            {
              py::gil_scoped_release release;
              g = p.objective.gradient(ens);
            }
            return py::make_tuple(
                to_array(g.controls, {controls.shape(0), controls.shape(1), controls.shape(2)}),
                to_array(g.x0s, {x0s.shape(0), x0s.shape(1)}));
          },
          py::arg("x0s"), py::arg("controls"))
      .def(
          "solve",
          [](const Problem& p, const Array& x0s, const Array& controls, const Array& omega_lower,
             const Array& omega_upper, const Array& u_lower, const Array& u_upper, std::size_t max_iters,
             bool optimize_x0) {
            const auto ens = make_ensemble(x0s, controls);
            SolverConfig cfg;
            cfg.max_iters = max_iters;
            cfg.optimize_x0 = optimize_x0;
            SolveResult res;
            {
              py::gil_scoped_release release;
              res = solve(ens, p.objective, BoxSet(flat(omega_lower), flat(omega_upper)),
                          BoxSet(flat(u_lower), flat(u_upper)), cfg);
            }
            const auto arrays = ensemble_arrays(res.ensemble);
            std::vector<double> totals;
            for (const auto& r : res.history) totals.push_back(r.total);
            py::dict out;
            out["x0s"] = arrays[0];
            out["controls"] = arrays[1];
            out["history"] = to_array(totals, {static_cast<py::ssize_t>(totals.size())});
            out["initial"] = breakdown_dict(res.initial);
            out["final"] = breakdown_dict(res.final);
            out["status"] = to_string(res.status);
            return out;
          },
          py::arg("x0s"), py::arg("controls"), py::arg("omega_lower"), py::arg("omega_upper"),
          py::arg("u_lower"), py::arg("u_upper"), py::arg("max_iters") = 200, py::arg("optimize_x0") = true);

  // Config-driven entry points take the JSON text of an experiment config
  // and return JSON text; the Python wrapper converts both ends.
  m.def("_normalize_config", [](const std::string& text) {
    const auto cfg = config_from_text(text);
    cfg.validate();
    return config_to_json(cfg).dump();
  });
  m.def(
      "_run",
      [](const std::string& text, const std::string& command, std::size_t threads) {
        const auto cfg = config_from_text(text);
        const Execution exec{threads, cfg.reduction};
        RunArtifacts run;
        {
          py::gil_scoped_release release;
          if (command == "optimize") {
            run = run_optimize(cfg, exec);
          } else if (command == "baseline") {
            run = run_baseline(cfg, exec);
          } else {
            throw std::invalid_argument("unknown command '" + command + "'");
          }
        }
        const auto arrays = ensemble_arrays(run.ensemble);
        return py::make_tuple(run.report.to_json().dump(),
                              to_array(run.terminals.points, {static_cast<py::ssize_t>(run.terminals.size()),
                                                              static_cast<py::ssize_t>(run.terminals.dim)}),
                              arrays[0], arrays[1]);
      },
      py::arg("config"), py::arg("command"), py::arg("threads") = 1);
  m.def(
      "_gradcheck",
      [](const std::string& text, std::size_t probes) {
        const auto cfg = config_from_text(text);
        py::gil_scoped_release release;
        return run_gradcheck(cfg, probes, Execution{}).to_json().dump();
      },
      py::arg("config"), py::arg("probes"));

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<DivergenceError>(m, "DivergenceError", PyExc_RuntimeError);
}
