#include "reachot/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

namespace reachot {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& msg) { throw ConfigError("config: " + msg); }

void require_object(const json& j, const std::string& where) {
  if (!j.is_object()) fail(where + " must be an object");
}

void reject_unknown(const json& j, const std::string& where, const std::set<std::string>& allowed) {
  require_object(j, where);
  for (const auto& [key, _] : j.items()) {
    if (!allowed.contains(key)) fail("unknown key '" + (where.empty() ? key : where + "." + key) + "'");
  }
}

double get_real(const json& j, const std::string& where) {
  if (!j.is_number()) fail(where + " must be a number");
  return j.get<double>();
}

std::size_t get_count(const json& j, const std::string& where) {
  if (!j.is_number_integer() || j.get<std::int64_t>() < 0) fail(where + " must be a non-negative integer");
  return j.get<std::size_t>();
}

std::string get_string(const json& j, const std::string& where) {
  if (!j.is_string()) fail(where + " must be a string");
  return j.get<std::string>();
}

bool get_bool(const json& j, const std::string& where) {
  if (!j.is_boolean()) fail(where + " must be a boolean");
  return j.get<bool>();
}

std::vector<double> get_reals(const json& j, const std::string& where) {
  if (!j.is_array()) fail(where + " must be an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(get_real(j[i], where + "[" + std::to_string(i) + "]"));
  return out;
}

BoxSet get_box(const json& j, const std::string& where) {
  reject_unknown(j, where, {"lower", "upper"});
  if (!j.contains("lower") || !j.contains("upper")) fail(where + " needs lower and upper");
  try {
    return BoxSet(get_reals(j["lower"], where + ".lower"), get_reals(j["upper"], where + ".upper"));
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    fail(where + ": " + e.what());
  }
}

json box_json(const BoxSet& b) { return {{"lower", b.lower()}, {"upper", b.upper()}}; }

template <typename Fn>
auto translate(const std::string& where, Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    fail(where + ": " + e.what());
  }
}

}  // namespace

ExperimentConfig config_from_json(const json& j) {
  reject_unknown(j, "", {"system", "grid", "ensemble", "kernel", "epsilon", "boxes", "solver", "oracle",
                         "baseline", "gradcheck", "sweep", "metrics", "seed", "output", "reduction"});
  ExperimentConfig c;

  if (j.contains("system")) {
    const auto& s = j["system"];
    reject_unknown(s, "system", {"name", "params"});
    if (s.contains("name")) c.system = get_string(s["name"], "system.name");
    if (s.contains("params")) {
      require_object(s["params"], "system.params");
      for (const auto& [k, v] : s["params"].items()) c.params[k] = get_real(v, "system.params." + k);
    }
  }
  if (j.contains("grid")) {
    const auto& g = j["grid"];
    reject_unknown(g, "grid", {"T", "steps", "scheme"});
    if (g.contains("T")) c.horizon = get_real(g["T"], "grid.T");
    if (g.contains("steps")) c.steps = get_count(g["steps"], "grid.steps");
    if (g.contains("scheme")) {
      c.scheme = translate("grid.scheme", [&] { return scheme_from_string(get_string(g["scheme"], "grid.scheme")); });
    }
  }
  if (j.contains("ensemble")) {
    const auto& e = j["ensemble"];
    reject_unknown(e, "ensemble", {"N", "init"});
    if (e.contains("N")) c.particles = get_count(e["N"], "ensemble.N");
    if (e.contains("init")) {
      c.init = translate("ensemble.init",
                         [&] { return init_strategy_from_string(get_string(e["init"], "ensemble.init")); });
    }
  }
  if (j.contains("kernel")) {
    const auto& k = j["kernel"];
    reject_unknown(k, "kernel", {"family", "delta"});
    if (k.contains("family")) {
      c.kernel_family = translate(
          "kernel.family", [&] { return kernel_family_from_string(get_string(k["family"], "kernel.family")); });
    }
    if (k.contains("delta")) c.delta = get_real(k["delta"], "kernel.delta");
  }
  if (j.contains("epsilon")) c.epsilon = get_real(j["epsilon"], "epsilon");
  if (j.contains("boxes")) {
    const auto& b = j["boxes"];
    reject_unknown(b, "boxes", {"omega", "u"});
    if (b.contains("omega")) c.omega = get_box(b["omega"], "boxes.omega");
    if (b.contains("u")) c.u_box = get_box(b["u"], "boxes.u");
  }
  if (j.contains("solver")) {
    const auto& s = j["solver"];
    reject_unknown(s, "solver", {"max_iters", "step0", "armijo_c", "backtrack", "tol_grad", "tol_obj",
                                 "optimize_x0", "max_backtracks", "step_growth", "control_metric"});
    auto& sc = c.solver;
    if (s.contains("max_iters")) sc.max_iters = get_count(s["max_iters"], "solver.max_iters");
    if (s.contains("step0")) sc.step0 = get_real(s["step0"], "solver.step0");
    if (s.contains("armijo_c")) sc.armijo_c = get_real(s["armijo_c"], "solver.armijo_c");
    if (s.contains("backtrack")) sc.backtrack = get_real(s["backtrack"], "solver.backtrack");
    if (s.contains("tol_grad") && !s["tol_grad"].is_null()) sc.tol_grad = get_real(s["tol_grad"], "solver.tol_grad");
    if (s.contains("tol_obj")) sc.tol_obj = get_real(s["tol_obj"], "solver.tol_obj");
    if (s.contains("optimize_x0")) sc.optimize_x0 = get_bool(s["optimize_x0"], "solver.optimize_x0");
    if (s.contains("max_backtracks")) sc.max_backtracks = get_count(s["max_backtracks"], "solver.max_backtracks");
    if (s.contains("step_growth")) sc.step_growth = get_real(s["step_growth"], "solver.step_growth");
    if (s.contains("control_metric")) {
      sc.control_metric = translate("solver.control_metric", [&] {
        return control_metric_from_string(get_string(s["control_metric"], "solver.control_metric"));
      });
    }
  }
  if (j.contains("oracle")) {
    const auto& o = j["oracle"];
    reject_unknown(o, "oracle", {"M", "segments", "h"});
    if (o.contains("M")) c.oracle_rollouts = get_count(o["M"], "oracle.M");
    if (o.contains("segments") && !o["segments"].is_null()) c.oracle_segments = get_count(o["segments"], "oracle.segments");
    if (o.contains("h") && !o["h"].is_null()) c.oracle_h = get_real(o["h"], "oracle.h");
  }
  if (j.contains("baseline")) {
    const auto& b = j["baseline"];
    reject_unknown(b, "baseline", {"segments"});
    if (b.contains("segments") && !b["segments"].is_null()) {
      c.baseline_segments = get_count(b["segments"], "baseline.segments");
    }
  }
  if (j.contains("gradcheck")) {
    const auto& g = j["gradcheck"];
    reject_unknown(g, "gradcheck", {"probes", "tolerance"});
    if (g.contains("probes")) c.gradcheck_probes = get_count(g["probes"], "gradcheck.probes");
    if (g.contains("tolerance")) c.gradcheck_tolerance = get_real(g["tolerance"], "gradcheck.tolerance");
  }
  if (j.contains("sweep")) {
    const auto& s = j["sweep"];
    reject_unknown(s, "sweep", {"epsilons", "deltas"});
    if (s.contains("epsilons")) c.sweep_epsilons = get_reals(s["epsilons"], "sweep.epsilons");
    if (s.contains("deltas")) c.sweep_deltas = get_reals(s["deltas"], "sweep.deltas");
  }
  if (j.contains("metrics")) {
    const auto& m = j["metrics"];
    reject_unknown(m, "metrics", {"reference_interval"});
    if (m.contains("reference_interval") && !m["reference_interval"].is_null()) {
      const auto v = get_reals(m["reference_interval"], "metrics.reference_interval");
      if (v.size() != 2 || !(v[0] < v[1])) fail("metrics.reference_interval must be [a, b] with a < b");
      c.reference_interval = std::array<double, 2>{v[0], v[1]};
    }
  }
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned() && !(j["seed"].is_number_integer() && j["seed"].get<std::int64_t>() >= 0)) {
      fail("seed must be a non-negative integer");
    }
    c.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("output")) c.output = get_string(j["output"], "output");
  if (j.contains("reduction")) {
    const auto r = get_string(j["reduction"], "reduction");
    if (r == "deterministic") {
      c.reduction = Reduction::deterministic;
    } else if (r == "fast") {
      c.reduction = Reduction::fast;
    } else {
      fail("reduction must be deterministic|fast");
    }
  }
  c.solver.seed = c.seed;
  return c;
}

json config_to_json(const ExperimentConfig& c) {
  json params = json::object();
  for (const auto& [k, v] : c.params) params[k] = v;
  json solver = {{"max_iters", c.solver.max_iters},
                 {"step0", c.solver.step0},
                 {"armijo_c", c.solver.armijo_c},
                 {"backtrack", c.solver.backtrack},
                 {"tol_grad", c.solver.tol_grad ? json(*c.solver.tol_grad) : json(nullptr)},
                 {"tol_obj", c.solver.tol_obj},
                 {"optimize_x0", c.solver.optimize_x0},
                 {"max_backtracks", c.solver.max_backtracks},
                 {"step_growth", c.solver.step_growth},
                 {"control_metric", to_string(c.solver.control_metric)}};
  json j = {
      {"system", {{"name", c.system}, {"params", params}}},
      {"grid", {{"T", c.horizon}, {"steps", c.steps}, {"scheme", to_string(c.scheme)}}},
      {"ensemble", {{"N", c.particles}, {"init", to_string(c.init)}}},
      {"kernel", {{"family", to_string(c.kernel_family)}, {"delta", c.delta}}},
      {"epsilon", c.epsilon},
      {"boxes", {{"omega", box_json(c.omega)}, {"u", box_json(c.u_box)}}},
      {"solver", solver},
      {"oracle",
       {{"M", c.oracle_rollouts},
        {"segments", c.oracle_segments ? json(*c.oracle_segments) : json(nullptr)},
        {"h", c.oracle_h ? json(*c.oracle_h) : json(nullptr)}}},
      {"baseline", {{"segments", c.baseline_segments ? json(*c.baseline_segments) : json(nullptr)}}},
      {"gradcheck", {{"probes", c.gradcheck_probes}, {"tolerance", c.gradcheck_tolerance}}},
      {"sweep", {{"epsilons", c.sweep_epsilons}, {"deltas", c.sweep_deltas}}},
      {"metrics",
       {{"reference_interval", c.reference_interval ? json(*c.reference_interval) : json(nullptr)}}},
      {"seed", c.seed},
      {"output", c.output},
      {"reduction", c.reduction == Reduction::deterministic ? "deterministic" : "fast"},
  };
  return j;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    fail(std::string("parse error in '") + path + "': " + e.what());
  }
  return config_from_json(j);
}

SystemPtr ExperimentConfig::validate() const {
  SystemPtr sys = translate("system", [&] { return make_system(system, params); });
  const std::size_t d = sys->state_dim();
  const std::size_t m = sys->control_dim();
  if (!(horizon > 0.0) || !std::isfinite(horizon)) fail("grid.T must be positive");
  if (steps == 0) fail("grid.steps must be >= 1");
  if (particles == 0) fail("ensemble.N must be >= 1");
  if (!(delta > 0.0) || !std::isfinite(delta)) fail("kernel.delta must be positive");
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) fail("epsilon must be positive");
  if (omega.dim() != d) {
    fail("boxes.omega has dimension " + std::to_string(omega.dim()) + ", system state dimension is " +
         std::to_string(d));
  }
  if (u_box.dim() != m) {
    fail("boxes.u has dimension " + std::to_string(u_box.dim()) + ", system control dimension is " +
         std::to_string(m));
  }
  translate("solver", [&] {
    solver.validate();
    return 0;
  });
  if (oracle_rollouts == 0) fail("oracle.M must be >= 1");
  const auto os = resolved_oracle_segments();
  if (os == 0 || os > steps) fail("oracle.segments must lie in [1, grid.steps]");
  if (!(resolved_oracle_h() > 0.0)) fail("oracle.h must be positive");
  const auto bs = resolved_baseline_segments();
  if (bs == 0 || bs > steps) fail("baseline.segments must lie in [1, grid.steps]");
  if (d > 3) fail("state dimension > 3 is not supported by the oracle grid");
  if (!(gradcheck_tolerance > 0.0)) fail("gradcheck.tolerance must be positive");
  for (double e : sweep_epsilons) {
    if (!(e > 0.0)) fail("sweep.epsilons entries must be positive");
  }
  for (double v : sweep_deltas) {
    if (!(v > 0.0)) fail("sweep.deltas entries must be positive");
  }
  return sys;
}

}  // namespace reachot
