#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "reachot/dynamics.hpp"
#include "reachot/integrate.hpp"
#include "reachot/kernel.hpp"
#include "reachot/optimizer.hpp"
#include "reachot/parallel.hpp"

namespace reachot {

/// Raised for malformed or inconsistent experiment configuration.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct ExperimentConfig {
  std::string system = "van_der_pol";
  ParamMap params;

  double horizon = 15.0;
  std::size_t steps = 1500;
  Scheme scheme = Scheme::rk4;

  std::size_t particles = 100;
  InitStrategy init = InitStrategy::uniform_random;

  KernelFamily kernel_family = KernelFamily::gaussian;
  double delta = 0.2;
  double epsilon = 0.05;

  BoxSet omega = BoxSet::cube(2, -1.0, 1.0);
  BoxSet u_box = BoxSet::cube(1, -1.0, 1.0);

  SolverConfig solver;

  std::size_t oracle_rollouts = 10000;
  std::optional<std::size_t> oracle_segments;  // default: steps
  std::optional<double> oracle_h;              // default: delta / 2

  std::optional<std::size_t> baseline_segments;  // default: steps

  std::size_t gradcheck_probes = 50;
  double gradcheck_tolerance = 1e-5;

  std::vector<double> sweep_epsilons;
  std::vector<double> sweep_deltas;

  /// Target interval for the 1-D W1-to-uniform metric; default is the span of
  /// the oracle cloud.
  std::optional<std::array<double, 2>> reference_interval;

  std::uint64_t seed = 0;
  std::string output = "out";
  Reduction reduction = Reduction::deterministic;

  std::size_t resolved_oracle_segments() const { return oracle_segments.value_or(steps); }
  double resolved_oracle_h() const { return oracle_h.value_or(0.5 * delta); }
  std::size_t resolved_baseline_segments() const { return baseline_segments.value_or(steps); }
  TimeGrid grid() const { return TimeGrid(horizon, steps); }

  /// Builds the system and checks every module precondition. Throws ConfigError.
  SystemPtr validate() const;

  bool operator==(const ExperimentConfig&) const = default;
};

/// Strict parse: unknown keys and wrong types are ConfigError.
ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& cfg);

ExperimentConfig load_config(const std::string& path);

}  // namespace reachot
