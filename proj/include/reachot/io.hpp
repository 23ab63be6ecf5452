#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "reachot/integrate.hpp"
#include "reachot/objective.hpp"
#include "reachot/optimizer.hpp"

namespace reachot::io {

/// %.17g: enough digits for an exact double round trip.
std::string format_double(double v);

/// Columns: particle_id, x1..xd.
void write_points_csv(const std::filesystem::path& path, std::span<const double> points,
                      std::size_t dim);
/// Columns: particle_id, step, t, u1..um.
void write_controls_csv(const std::filesystem::path& path, const ParticleEnsemble& ens,
                        const TimeGrid& grid);
/// Columns: iter, total, control_energy, interaction_energy, step, grad_norm.
void write_history_csv(const std::filesystem::path& path,
                       const std::vector<IterationRecord>& history);

/// Reads a points file written by write_points_csv; returns N x d row-major
/// values and sets `dim`.
std::vector<double> read_points_csv(const std::filesystem::path& path, std::size_t& dim);
/// Rebuilds the controls of an ensemble from controls.csv.
std::vector<DiscretizedControl> read_controls_csv(const std::filesystem::path& path,
                                                  std::size_t steps);
std::vector<IterationRecord> read_history_csv(const std::filesystem::path& path);

}  // namespace reachot::io
