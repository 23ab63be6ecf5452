#include "reachot/io.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace reachot::io {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read '" + path.string() + "'");
  return in;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

double parse_double(const std::string& s, const std::filesystem::path& path) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') {
    throw std::runtime_error("bad number '" + s + "' in '" + path.string() + "'");
  }
  return v;
}

}  // namespace

void write_points_csv(const std::filesystem::path& path, std::span<const double> points,
                      std::size_t dim) {
  auto out = open_out(path);
  out << "particle_id";
  for (std::size_t k = 0; k < dim; ++k) out << ",x" << (k + 1);
  out << '\n';
  const std::size_t n = points.size() / dim;
  for (std::size_t i = 0; i < n; ++i) {
    out << i;
    for (std::size_t k = 0; k < dim; ++k) out << ',' << format_double(points[i * dim + k]);
    out << '\n';
  }
}

void write_controls_csv(const std::filesystem::path& path, const ParticleEnsemble& ens,
                        const TimeGrid& grid) {
  auto out = open_out(path);
  const std::size_t m = ens.controls.empty() ? 0 : ens.controls.front().dim;
  out << "particle_id,step,t";
  for (std::size_t j = 0; j < m; ++j) out << ",u" << (j + 1);
  out << '\n';
  for (std::size_t i = 0; i < ens.size(); ++i) {
    const auto& c = ens.controls[i];
    for (std::size_t k = 0; k < c.steps; ++k) {
      out << i << ',' << k << ',' << format_double(grid.time(k));
      for (double v : c.row(k)) out << ',' << format_double(v);
      out << '\n';
    }
  }
}

void write_history_csv(const std::filesystem::path& path,
                       const std::vector<IterationRecord>& history) {
  auto out = open_out(path);
  out << "iter,total,control_energy,interaction_energy,step,grad_norm\n";
  for (const auto& r : history) {
    out << r.iter << ',' << format_double(r.total) << ',' << format_double(r.control_energy) << ','
        << format_double(r.interaction_energy) << ',' << format_double(r.step) << ','
        << format_double(r.grad_norm) << '\n';
  }
}

std::vector<double> read_points_csv(const std::filesystem::path& path, std::size_t& dim) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty file '" + path.string() + "'");
  const auto header = split(line);
  if (header.size() < 2 || header[0] != "particle_id") {
    throw std::runtime_error("unexpected header in '" + path.string() + "'");
  }
  dim = header.size() - 1;
  std::vector<double> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != dim + 1) throw std::runtime_error("ragged row in '" + path.string() + "'");
    for (std::size_t k = 1; k < cells.size(); ++k) out.push_back(parse_double(cells[k], path));
  }
  return out;
}

std::vector<DiscretizedControl> read_controls_csv(const std::filesystem::path& path,
                                                  std::size_t steps) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty file '" + path.string() + "'");
  const auto header = split(line);
  if (header.size() < 4 || header[0] != "particle_id" || header[1] != "step" || header[2] != "t") {
    throw std::runtime_error("unexpected header in '" + path.string() + "'");
  }
  const std::size_t m = header.size() - 3;
  std::vector<DiscretizedControl> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != m + 3) throw std::runtime_error("ragged row in '" + path.string() + "'");
    const auto i = static_cast<std::size_t>(std::stoull(cells[0]));
    const auto k = static_cast<std::size_t>(std::stoull(cells[1]));
    if (i >= out.size()) out.resize(i + 1, DiscretizedControl(steps, m));
    if (k >= steps) throw std::runtime_error("step index out of range in '" + path.string() + "'");
    auto row = out[i].row(k);
    for (std::size_t j = 0; j < m; ++j) row[j] = parse_double(cells[3 + j], path);
  }
  return out;
}

std::vector<IterationRecord> read_history_csv(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::string line;
  std::getline(in, line);
  std::vector<IterationRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto c = split(line);
    if (c.size() != 6) throw std::runtime_error("ragged row in '" + path.string() + "'");
    IterationRecord r;
    r.iter = static_cast<std::size_t>(std::stoull(c[0]));
    r.total = parse_double(c[1], path);
    r.control_energy = parse_double(c[2], path);
    r.interaction_energy = parse_double(c[3], path);
    r.step = parse_double(c[4], path);
    r.grad_norm = parse_double(c[5], path);
    out.push_back(r);
  }
  return out;
}

}  // namespace reachot::io
