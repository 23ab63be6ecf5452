#include "reachot/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "reachot/random.hpp"

namespace reachot {

std::size_t segment_of_step(std::size_t step, std::size_t steps, std::size_t segments) {
  // Largest s with s * steps / segments <= step.
  return std::min(segments - 1, ((step + 1) * segments - 1) / steps);
}

namespace {

void check_boxes(const ControlAffineSystem& sys, const BoxSet& omega, const BoxSet& u_box) {
  if (omega.dim() != sys.state_dim()) throw std::invalid_argument("Omega dimension mismatch");
  if (u_box.dim() != sys.control_dim()) throw std::invalid_argument("U dimension mismatch");
}

void check_segments(std::size_t segments, const TimeGrid& grid) {
  if (segments == 0 || segments > grid.steps) {
    throw std::invalid_argument("segments must lie in [1, steps] (got " +
                                std::to_string(segments) + ")");
  }
}

// Square waves (alternating vertices) reach states that i.i.d. vertex
// sequences almost never do, e.g. resonant pumping of an oscillator.
enum class RolloutKind { uniform, bang_bang, square_wave, zero };
constexpr std::size_t kRolloutKinds = 4;

// Fills `c` with a piecewise-constant control of `pieces` pieces.
void fill_piecewise(DiscretizedControl& c, std::size_t pieces, RolloutKind kind,
                    const BoxSet& u_box, Rng& rng) {
  const std::size_t m = c.dim;
  std::vector<double> piece(pieces * m, 0.0);
  const std::vector<double> zero(m, 0.0);
  for (std::size_t s = 0; s < pieces; ++s) {
    std::span<double> row(piece.data() + s * m, m);
    switch (kind) {
      case RolloutKind::uniform:
        rng.fill_uniform(u_box, row);
        break;
      case RolloutKind::bang_bang:
        for (std::size_t j = 0; j < m; ++j) {
          row[j] = (rng.uniform01() < 0.5) ? u_box.lower()[j] : u_box.upper()[j];
        }
        break;
      case RolloutKind::square_wave:
        for (std::size_t j = 0; j < m; ++j) {
          const bool up = s == 0 ? rng.uniform01() < 0.5 : piece[(s - 1) * m + j] == u_box.lower()[j];
          row[j] = up ? u_box.upper()[j] : u_box.lower()[j];
        }
        break;
      case RolloutKind::zero:
        u_box.project(zero, row);
        break;
    }
  }
  for (std::size_t k = 0; k < c.steps; ++k) {
    const std::size_t s = segment_of_step(k, c.steps, pieces);
    std::copy_n(piece.begin() + static_cast<std::ptrdiff_t>(s * m), m, c.row(k).begin());
  }
}

}  // namespace

ParticleEnsemble baseline_ensemble(const ControlAffineSystem& sys, const TimeGrid& grid,
                                   const BoxSet& omega, const BoxSet& u_box, std::size_t n,
                                   std::size_t segments, std::uint64_t seed) {
  check_boxes(sys, omega, u_box);
  check_segments(segments, grid);
  if (n == 0) throw std::invalid_argument("baseline: N must be >= 1");
  Rng rng(seed);
  ParticleEnsemble ens;
  ens.state_dim = sys.state_dim();
  ens.x0s.resize(n * ens.state_dim);
  for (std::size_t i = 0; i < n; ++i) rng.fill_uniform(omega, ens.x0(i));
  ens.controls.assign(n, DiscretizedControl(grid.steps, sys.control_dim()));
  for (auto& c : ens.controls) fill_piecewise(c, segments, RolloutKind::uniform, u_box, rng);
  return ens;
}

PointCloud terminal_cloud(const ControlAffineSystem& sys, const ParticleEnsemble& ens,
                          const TimeGrid& grid, Scheme scheme, const Execution& exec,
                          std::string label) {
  const std::size_t d = sys.state_dim();
  PointCloud cloud;
  cloud.dim = d;
  cloud.label = std::move(label);
  cloud.points.resize(ens.size() * d);
  parallel_for(ens.size(), exec, [&](std::size_t i) {
    try {
      const auto xT = endpoint(sys, ens.x0(i), ens.controls[i], grid, scheme);
      std::copy(xT.begin(), xT.end(), cloud.points.begin() + static_cast<std::ptrdiff_t>(i * d));
    } catch (const DivergenceError& e) {
      throw DivergenceError(e.step(), static_cast<std::ptrdiff_t>(i));
    }
  });
  return cloud;
}

PointCloud baseline_sample(const ControlAffineSystem& sys, const TimeGrid& grid, Scheme scheme,
                           const BoxSet& omega, const BoxSet& u_box, std::size_t n,
                           std::size_t segments, std::uint64_t seed, const Execution& exec) {
  const auto ens = baseline_ensemble(sys, grid, omega, u_box, n, segments, seed);
  return terminal_cloud(sys, ens, grid, scheme, exec, "baseline");
}

// OracleGrid ----------------------------------------------------------------

OracleGrid OracleGrid::from_points(std::span<const double> points, std::size_t dim, double h) {
  if (dim == 0 || dim > 3) throw std::invalid_argument("oracle grid supports 1 <= d <= 3");
  if (!(h > 0.0) || !std::isfinite(h)) throw std::invalid_argument("oracle cell size must be > 0");
  if (points.empty() || points.size() % dim != 0) {
    throw std::invalid_argument("oracle needs at least one point");
  }
  const std::size_t n = points.size() / dim;
  OracleGrid g;
  g.dim_ = dim;
  g.h_ = h;
  std::vector<std::int64_t> lo(dim, std::numeric_limits<std::int64_t>::max());
  std::vector<std::int64_t> hi(dim, std::numeric_limits<std::int64_t>::min());
  std::vector<std::int64_t> idx(n * dim);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < dim; ++k) {
      const double v = points[i * dim + k];
      if (!std::isfinite(v)) throw std::invalid_argument("oracle point is not finite");
      const auto c = static_cast<std::int64_t>(std::floor(v / h));
      idx[i * dim + k] = c;
      lo[k] = std::min(lo[k], c);
      hi[k] = std::max(hi[k], c);
    }
  }
  g.origin_ = lo;
  g.extent_.resize(dim);
  std::size_t total = 1;
  for (std::size_t k = 0; k < dim; ++k) {
    g.extent_[k] = static_cast<std::size_t>(hi[k] - lo[k] + 1);
    total *= g.extent_[k];
    if (total > (std::size_t{1} << 28)) throw std::invalid_argument("oracle grid too large; raise h");
  }
  g.occupancy_.assign(total, 0);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t cell = 0;
    for (std::size_t k = dim; k-- > 0;) {
      cell = cell * g.extent_[k] + static_cast<std::size_t>(idx[i * dim + k] - lo[k]);
    }
    if (!g.occupancy_[cell]) {
      g.occupancy_[cell] = 1;
      ++g.occupied_;
    }
  }
  return g;
}

double OracleGrid::c_hat() const {
  return static_cast<double>(occupied_) * std::pow(h_, static_cast<double>(dim_));
}

std::vector<double> OracleGrid::lower() const {
  std::vector<double> out(dim_);
  for (std::size_t k = 0; k < dim_; ++k) out[k] = static_cast<double>(origin_[k]) * h_;
  return out;
}

std::vector<double> OracleGrid::upper() const {
  std::vector<double> out(dim_);
  for (std::size_t k = 0; k < dim_; ++k) {
    out[k] = static_cast<double>(origin_[k] + static_cast<std::int64_t>(extent_[k])) * h_;
  }
  return out;
}

std::optional<std::size_t> OracleGrid::cell_of(std::span<const double> p) const {
  if (p.size() != dim_) throw std::invalid_argument("cell_of: dimension mismatch");
  std::size_t cell = 0;
  for (std::size_t k = dim_; k-- > 0;) {
    if (!std::isfinite(p[k])) return std::nullopt;
    const auto c = static_cast<std::int64_t>(std::floor(p[k] / h_)) - origin_[k];
    if (c < 0 || c >= static_cast<std::int64_t>(extent_[k])) return std::nullopt;
    cell = cell * extent_[k] + static_cast<std::size_t>(c);
  }
  return cell;
}

std::vector<double> OracleGrid::cell_center(std::size_t cell) const {
  std::vector<double> out(dim_);
  for (std::size_t k = 0; k < dim_; ++k) {
    const std::size_t c = cell % extent_[k];
    cell /= extent_[k];
    out[k] = (static_cast<double>(origin_[k] + static_cast<std::int64_t>(c)) + 0.5) * h_;
  }
  return out;
}

std::vector<std::size_t> OracleGrid::occupied_list() const {
  std::vector<std::size_t> out;
  out.reserve(occupied_);
  for (std::size_t c = 0; c < occupancy_.size(); ++c) {
    if (occupancy_[c]) out.push_back(c);
  }
  return out;
}

OracleResult oracle_reachable(const ControlAffineSystem& sys, const TimeGrid& grid, Scheme scheme,
                              const BoxSet& omega, const BoxSet& u_box, std::size_t rollouts,
                              std::size_t segments, double h, std::uint64_t seed,
                              const Execution& exec) {
  check_boxes(sys, omega, u_box);
  check_segments(segments, grid);
  if (rollouts == 0) throw std::invalid_argument("oracle: rollout count must be >= 1");
  const std::size_t d = sys.state_dim();
  OracleResult out;
  out.cloud.dim = d;
  out.cloud.label = "oracle";
  out.cloud.points.resize(rollouts * d);
  const double log_segments = std::log(static_cast<double>(segments));
  parallel_for(rollouts, exec, [&](std::size_t r) {
    Rng rng(derive_seed(seed, r));
    std::vector<double> x0(d);
    rng.fill_uniform(omega, std::span<double>(x0));
    const auto kind = static_cast<RolloutKind>(r % kRolloutKinds);
    auto pieces = static_cast<std::size_t>(std::llround(std::exp(rng.uniform01() * log_segments)));
    pieces = std::clamp<std::size_t>(pieces, 1, segments);
    DiscretizedControl c(grid.steps, sys.control_dim());
    fill_piecewise(c, pieces, kind, u_box, rng);
    try {
      const auto xT = endpoint(sys, x0, c, grid, scheme);
      std::copy(xT.begin(), xT.end(), out.cloud.points.begin() + static_cast<std::ptrdiff_t>(r * d));
    } catch (const DivergenceError& e) {
      throw DivergenceError(e.step(), static_cast<std::ptrdiff_t>(r));
    }
  });
  out.grid = OracleGrid::from_points(out.cloud.points, d, h);
  return out;
}

CoverageMetrics coverage_metrics(const PointCloud& cloud, const OracleGrid& oracle,
                                 const KernelSpec& kernel, double epsilon) {
  if (oracle.occupied_cells() == 0) throw std::invalid_argument("coverage_metrics: empty oracle");
  if (cloud.dim != oracle.dim() || cloud.dim != kernel.dim()) {
    throw std::invalid_argument("coverage_metrics: dimension mismatch");
  }
  const std::size_t n = cloud.size();
  if (n == 0) throw std::invalid_argument("coverage_metrics: empty cloud");

  CoverageMetrics out;
  out.interaction_energy = interaction_energy(cloud.points, kernel, epsilon);
  out.occupied_cells = oracle.occupied_cells();
  out.c_hat = oracle.c_hat();

  std::vector<std::uint8_t> hit(oracle.total_cells(), 0);
  std::size_t outside = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto cell = oracle.cell_of(cloud.point(i));
    if (!cell || !oracle.occupied(*cell)) {
      ++outside;
      continue;
    }
    if (!hit[*cell]) {
      hit[*cell] = 1;
      ++out.covered_cells;
    }
  }
  out.coverage = static_cast<double>(out.covered_cells) / static_cast<double>(out.occupied_cells);
  out.outside_frac = static_cast<double>(outside) / static_cast<double>(n);

  if (n >= 2) {
    const std::size_t d = cloud.dim;
    double nn_min = std::numeric_limits<double>::infinity();
    double nn_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        double r2 = 0.0;
        for (std::size_t k = 0; k < d; ++k) {
          const double dz = cloud.points[i * d + k] - cloud.points[j * d + k];
          r2 += dz * dz;
        }
        best = std::min(best, r2);
      }
      best = std::sqrt(best);
      nn_min = std::min(nn_min, best);
      nn_sum += best;
    }
    out.nn_min = nn_min;
    out.nn_mean = nn_sum / static_cast<double>(n);
  }
  return out;
}

double wasserstein1_1d(std::span<const double> points, double a, double b) {
  if (points.empty()) throw std::invalid_argument("wasserstein1_1d: empty sample");
  if (!(a <= b)) throw std::invalid_argument("wasserstein1_1d: require a <= b");
  std::vector<double> x(points.begin(), points.end());
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  const double len = b - a;
  // Integral over t in [0,1] of |Q_n(t) - (a + len t)|, piecewise linear on [i/n, (i+1)/n].
  double total = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double g0 = x[i] - a - len * static_cast<double>(i) / n;
    const double g1 = x[i] - a - len * static_cast<double>(i + 1) / n;
    const double a0 = std::abs(g0), a1 = std::abs(g1);
    if (g0 * g1 >= 0.0) {
      total += 0.5 * (a0 + a1) / n;
    } else {
      total += 0.5 * (g0 * g0 + g1 * g1) / (a0 + a1) / n;
    }
  }
  return total;
}

double wasserstein1_1d(const PointCloud& cloud, double a, double b) {
  if (cloud.dim != 1) throw std::invalid_argument("wasserstein1_1d: cloud must be one-dimensional");
  return wasserstein1_1d(cloud.points, a, b);
}

double ks_statistic_uniform(std::span<const double> points, double a, double b) {
  if (points.empty()) throw std::invalid_argument("ks_statistic_uniform: empty sample");
  if (!(a < b)) throw std::invalid_argument("ks_statistic_uniform: require a < b");
  std::vector<double> x(points.begin(), points.end());
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double stat = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = std::clamp((x[i] - a) / (b - a), 0.0, 1.0);
    stat = std::max({stat, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return stat;
}

}  // namespace reachot
