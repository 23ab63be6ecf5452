#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "reachot/config.hpp"

using namespace reachot;
using nlohmann::json;

namespace {

json minimal() {
  return json::parse(R"({
    "system": {"name": "pendulum", "params": {"beta": 0.2}},
    "grid": {"T": 5, "steps": 100, "scheme": "euler"},
    "ensemble": {"N": 7, "init": "zero_control"},
    "kernel": {"family": "bump", "delta": 0.3},
    "epsilon": 0.02,
    "boxes": {"omega": {"lower": [-0.5, -0.5], "upper": [0.5, 0.5]}, "u": {"lower": [-2], "upper": [2]}},
    "solver": {"max_iters": 12, "tol_grad": 1e-9, "optimize_x0": false, "control_metric": "euclidean"},
    "oracle": {"M": 500, "segments": 10, "h": 0.05},
    "baseline": {"segments": 20},
    "gradcheck": {"probes": 9, "tolerance": 1e-4},
    "sweep": {"epsilons": [0.1, 0.05], "deltas": [0.3]},
    "seed": 99,
    "output": "somewhere",
    "reduction": "fast"
  })");
}

}  // namespace

TEST(Config, ParsesEverySection) {
  const auto cfg = config_from_json(minimal());
  EXPECT_EQ(cfg.system, "pendulum");
  EXPECT_DOUBLE_EQ(cfg.params.at("beta"), 0.2);
  EXPECT_EQ(cfg.steps, 100u);
  EXPECT_EQ(cfg.scheme, Scheme::euler);
  EXPECT_EQ(cfg.particles, 7u);
  EXPECT_EQ(cfg.init, InitStrategy::zero_control);
  EXPECT_EQ(cfg.kernel_family, KernelFamily::bump);
  EXPECT_EQ(cfg.u_box, BoxSet({-2.0}, {2.0}));
  EXPECT_EQ(cfg.solver.max_iters, 12u);
  EXPECT_FALSE(cfg.solver.optimize_x0);
  EXPECT_EQ(cfg.solver.control_metric, ControlMetric::euclidean);
  EXPECT_EQ(cfg.solver.seed, 99u);
  EXPECT_EQ(cfg.resolved_oracle_segments(), 10u);
  EXPECT_EQ(cfg.resolved_baseline_segments(), 20u);
  EXPECT_EQ(cfg.sweep_epsilons.size(), 2u);
  EXPECT_EQ(cfg.reduction, Reduction::fast);
  EXPECT_NO_THROW(cfg.validate());
}

TEST(Config, DefaultsResolve) {
  const auto cfg = config_from_json(json::parse(R"({"system": {"name": "van_der_pol"}})"));
  EXPECT_EQ(cfg.particles, 100u);
  EXPECT_DOUBLE_EQ(cfg.horizon, 15.0);
  EXPECT_EQ(cfg.steps, 1500u);
  EXPECT_DOUBLE_EQ(cfg.resolved_oracle_h(), 0.1);
  EXPECT_EQ(cfg.resolved_baseline_segments(), 1500u);
}

TEST(Config, RoundTripsExactly) {
  auto j = minimal();
  j["epsilon"] = 0.1 + 0.2;  // not representable in short decimal form
  const auto cfg = config_from_json(j);
  const auto again = config_from_json(json::parse(config_to_json(cfg).dump()));
  EXPECT_EQ(cfg, again);
  EXPECT_EQ(again.epsilon, 0.1 + 0.2);
}

TEST(Config, UnknownKeysAreRejected) {
  for (const char* path : {"/typo", "/grid/dt", "/solver/learning_rate", "/boxes/omega/middle"}) {
    auto j = minimal();
    j[json::json_pointer(path)] = 1;
    EXPECT_THROW(config_from_json(j), ConfigError) << path;
  }
}

TEST(Config, ValidationErrors) {
  auto bad = [](const char* path, json value) {
    auto j = minimal();
    j[json::json_pointer(path)] = std::move(value);
    return j;
  };
  EXPECT_THROW(config_from_json(bad("/epsilon", -1.0)).validate(), ConfigError);
  EXPECT_THROW(config_from_json(bad("/kernel/delta", 0.0)).validate(), ConfigError);
  EXPECT_THROW(config_from_json(bad("/system/name", "lorenz")).validate(), ConfigError);
  EXPECT_THROW(config_from_json(bad("/boxes/u/lower", json::array({-1, -1}))).validate(), ConfigError);
  EXPECT_THROW(config_from_json(bad("/oracle/segments", 1000)).validate(), ConfigError);
  EXPECT_THROW(config_from_json(bad("/solver/armijo_c", 2.0)).validate(), ConfigError);
  EXPECT_THROW(config_from_json(bad("/grid/scheme", "midpoint")), ConfigError);
  EXPECT_THROW(config_from_json(bad("/ensemble/N", "many")), ConfigError);
}

TEST(Config, LoadFromFile) {
  const auto path = std::filesystem::temp_directory_path() / "reachot_config_test.json";
  std::ofstream(path) << minimal().dump(2);
  EXPECT_EQ(load_config(path.string()), config_from_json(minimal()));
  std::ofstream(path) << "{ not json";
  EXPECT_THROW(load_config(path.string()), ConfigError);
  EXPECT_THROW(load_config("/nonexistent/config.json"), ConfigError);
  std::filesystem::remove(path);
}
