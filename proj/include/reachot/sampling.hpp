#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "reachot/dynamics.hpp"
#include "reachot/integrate.hpp"
#include "reachot/kernel.hpp"
#include "reachot/objective.hpp"
#include "reachot/parallel.hpp"

namespace reachot {

struct PointCloud {
  std::size_t dim = 0;
  std::vector<double> points;  // M x d
  std::string label;

  std::size_t size() const { return dim == 0 ? 0 : points.size() / dim; }
  std::span<const double> point(std::size_t i) const { return {points.data() + i * dim, dim}; }
};

/// Piecewise-constant control with `segments` pieces of (nearly) equal length;
/// piece s covers steps [s K / segments, (s + 1) K / segments).
std::size_t segment_of_step(std::size_t step, std::size_t steps, std::size_t segments);

/// Random-control ensemble: x0 uniform in Omega, each of the `segments` pieces
/// drawn uniformly from U. Deterministic in `seed`.
ParticleEnsemble baseline_ensemble(const ControlAffineSystem& sys, const TimeGrid& grid,
                                   const BoxSet& omega, const BoxSet& u_box, std::size_t n,
                                   std::size_t segments, std::uint64_t seed);

/// Terminal states of every particle. DivergenceError carries the particle index.
PointCloud terminal_cloud(const ControlAffineSystem& sys, const ParticleEnsemble& ens,
                          const TimeGrid& grid, Scheme scheme, const Execution& exec = {},
                          std::string label = {});

PointCloud baseline_sample(const ControlAffineSystem& sys, const TimeGrid& grid, Scheme scheme,
                           const BoxSet& omega, const BoxSet& u_box, std::size_t n,
                           std::size_t segments, std::uint64_t seed, const Execution& exec = {});

/// Occupancy of the lattice h Z^d by a reference cloud. Cells are anchored at
/// the origin, so unions of clouds only ever add cells.
class OracleGrid {
 public:
  static OracleGrid from_points(std::span<const double> points, std::size_t dim, double h);

  std::size_t dim() const { return dim_; }
  double cell_size() const { return h_; }
  std::size_t occupied_cells() const { return occupied_; }
  std::size_t total_cells() const { return occupancy_.size(); }
  /// Estimated Lebesgue measure: occupied cells times h^d.
  double c_hat() const;

  /// Lattice bounding box of the occupied region (inclusive cell range) in
  /// state coordinates.
  std::vector<double> lower() const;
  std::vector<double> upper() const;

  /// Dense index of the cell containing p, or nullopt outside the bounding box.
  std::optional<std::size_t> cell_of(std::span<const double> p) const;
  bool occupied(std::size_t cell) const { return occupancy_[cell] != 0; }
  std::vector<double> cell_center(std::size_t cell) const;
  /// Dense indices of occupied cells, ascending.
  std::vector<std::size_t> occupied_list() const;

 private:
  std::size_t dim_ = 0;
  double h_ = 0.0;
  std::vector<std::int64_t> origin_;  // lattice index of dense cell 0
  std::vector<std::size_t> extent_;
  std::vector<std::uint8_t> occupancy_;
  std::size_t occupied_ = 0;
};

struct OracleResult {
  OracleGrid grid;
  PointCloud cloud;
};

/// Union of M randomized rollouts: uniform piecewise controls, random
/// bang-bang vertex controls, alternating (square-wave) vertex controls and
/// zero control in rotation. Each rollout draws its piece
/// count log-uniformly from [1, segments]. Rollout r uses its own stream derived
/// from (seed, r), so the first M rollouts do not depend on the total count.
OracleResult oracle_reachable(const ControlAffineSystem& sys, const TimeGrid& grid, Scheme scheme,
                              const BoxSet& omega, const BoxSet& u_box, std::size_t rollouts,
                              std::size_t segments, double h, std::uint64_t seed,
                              const Execution& exec = {});

struct CoverageMetrics {
  double interaction_energy = 0.0;
  double coverage = 0.0;
  double nn_min = 0.0;
  double nn_mean = 0.0;
  double outside_frac = 0.0;
  std::size_t covered_cells = 0;
  std::size_t occupied_cells = 0;
  double c_hat = 0.0;
};

CoverageMetrics coverage_metrics(const PointCloud& cloud, const OracleGrid& oracle,
                                 const KernelSpec& kernel, double epsilon);

/// Exact W1 between the empirical measure of `points` (d = 1) and the uniform
/// distribution on [a, b].
double wasserstein1_1d(std::span<const double> points, double a, double b);
double wasserstein1_1d(const PointCloud& cloud, double a, double b);

/// Kolmogorov-Smirnov statistic sup |F_n - F| against uniform on [a, b].
double ks_statistic_uniform(std::span<const double> points, double a, double b);

}  // namespace reachot
