#include "reachot/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <stdexcept>

#include "reachot/random.hpp"

namespace reachot {

BoxSet::BoxSet(std::vector<double> lower, std::vector<double> upper)
    : lower_(std::move(lower)), upper_(std::move(upper)) {
  if (lower_.size() != upper_.size()) {
    throw std::invalid_argument("BoxSet: lower and upper have different lengths");
  }
  if (lower_.empty()) throw std::invalid_argument("BoxSet: empty dimension");
  for (std::size_t k = 0; k < lower_.size(); ++k) {
    if (!std::isfinite(lower_[k]) || !std::isfinite(upper_[k]) || lower_[k] > upper_[k]) {
      throw std::invalid_argument("BoxSet: require finite lower[k] <= upper[k] (k=" +
                                  std::to_string(k) + ")");
    }
  }
}

BoxSet BoxSet::cube(std::size_t dim, double lo, double hi) {
  return BoxSet(std::vector<double>(dim, lo), std::vector<double>(dim, hi));
}

bool BoxSet::contains(std::span<const double> p) const {
  if (p.size() != dim()) return false;
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (!(p[k] >= lower_[k] && p[k] <= upper_[k])) return false;
  }
  return true;
}

void BoxSet::project(std::span<const double> p, std::span<double> out) const {
  if (p.size() != dim() || out.size() != dim()) {
    throw std::invalid_argument("BoxSet::project: dimension mismatch");
  }
  for (std::size_t k = 0; k < p.size(); ++k) out[k] = std::clamp(p[k], lower_[k], upper_[k]);
}

std::vector<double> BoxSet::project(std::span<const double> p) const {
  std::vector<double> out(p.size());
  project(p, out);
  return out;
}

// ControlAffineSystem ---------------------------------------------------------

void ControlAffineSystem::control_field_jacobian(std::size_t, std::span<const double>,
                                                 std::span<double> out) const {
  std::fill(out.begin(), out.end(), 0.0);
}

void ControlAffineSystem::rhs_into(std::span<const double> x, std::span<const double> u,
                                   std::span<double> out) const {
  const std::size_t d = state_dim();
  drift(x, out);
  double field[8];
  std::vector<double> heap;
  std::span<double> g(field, d);
  if (d > 8) {
    heap.resize(d);
    g = heap;
  }
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (u[i] == 0.0) continue;
    control_field(i, x, g);
    for (std::size_t k = 0; k < d; ++k) out[k] += u[i] * g[k];
  }
}

void ControlAffineSystem::jacobian_into(std::span<const double> x, std::span<const double> u,
                                        std::span<double> out) const {
  drift_jacobian(x, out);
  if (control_fields_constant()) return;
  const std::size_t d = state_dim();
  std::vector<double> gj(d * d);
  for (std::size_t i = 0; i < u.size(); ++i) {
    control_field_jacobian(i, x, gj);
    for (std::size_t k = 0; k < d * d; ++k) out[k] += u[i] * gj[k];
  }
}

void ControlAffineSystem::control_matrix_into(std::span<const double> x,
                                              std::span<double> out) const {
  const std::size_t d = state_dim();
  const std::size_t m = control_dim();
  double buf[8];
  std::vector<double> heap;
  std::span<double> g(buf, d);
  if (d > 8) {
    heap.resize(d);
    g = heap;
  }
  for (std::size_t i = 0; i < m; ++i) {
    control_field(i, x, g);
    for (std::size_t k = 0; k < d; ++k) out[k * m + i] = g[k];
  }
}

void ControlAffineSystem::check_dims(std::span<const double> x,
                                     std::span<const double> u) const {
  if (x.size() != state_dim()) {
    throw std::invalid_argument(name() + ": state has length " + std::to_string(x.size()) +
                                ", expected " + std::to_string(state_dim()));
  }
  if (u.size() != control_dim()) {
    throw std::invalid_argument(name() + ": control has length " + std::to_string(u.size()) +
                                ", expected " + std::to_string(control_dim()));
  }
}

std::vector<double> ControlAffineSystem::rhs(std::span<const double> x,
                                             std::span<const double> u) const {
  check_dims(x, u);
  std::vector<double> out(state_dim());
  rhs_into(x, u, out);
  return out;
}

std::vector<double> ControlAffineSystem::state_jacobian(std::span<const double> x,
                                                        std::span<const double> u) const {
  check_dims(x, u);
  std::vector<double> out(state_dim() * state_dim());
  jacobian_into(x, u, out);
  return out;
}

// Built-in systems ------------------------------------------------------------

void VanDerPol::drift(std::span<const double> x, std::span<double> out) const {
  out[0] = x[1];
  out[1] = mu_ * (1.0 - x[0] * x[0]) * x[1] - x[0];
}

void VanDerPol::control_field(std::size_t, std::span<const double>,
                              std::span<double> out) const {
  out[0] = 0.0;
  out[1] = 1.0;
}

void VanDerPol::drift_jacobian(std::span<const double> x, std::span<double> out) const {
  out[0] = 0.0;
  out[1] = 1.0;
  out[2] = -2.0 * mu_ * x[0] * x[1] - 1.0;
  out[3] = mu_ * (1.0 - x[0] * x[0]);
}

void DampedPendulum::drift(std::span<const double> x, std::span<double> out) const {
  out[0] = x[1];
  out[1] = -(g_ / length_) * std::sin(x[0]) - beta_ * x[1];
}

void DampedPendulum::control_field(std::size_t, std::span<const double>,
                                   std::span<double> out) const {
  out[0] = 0.0;
  out[1] = 1.0;
}

void DampedPendulum::drift_jacobian(std::span<const double> x, std::span<double> out) const {
  out[0] = 0.0;
  out[1] = 1.0;
  out[2] = -(g_ / length_) * std::cos(x[0]);
  out[3] = -beta_;
}

void SingleIntegrator::drift(std::span<const double>, std::span<double> out) const {
  std::fill(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(dim_), 0.0);
}

void SingleIntegrator::control_field(std::size_t i, std::span<const double>,
                                     std::span<double> out) const {
  for (std::size_t k = 0; k < dim_; ++k) out[k] = (k == i) ? 1.0 : 0.0;
}

void SingleIntegrator::drift_jacobian(std::span<const double>, std::span<double> out) const {
  std::fill(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(dim_ * dim_), 0.0);
}

void DoubleIntegrator::drift(std::span<const double> x, std::span<double> out) const {
  out[0] = x[1];
  out[1] = 0.0;
}

void DoubleIntegrator::control_field(std::size_t, std::span<const double>,
                                     std::span<double> out) const {
  out[0] = 0.0;
  out[1] = 1.0;
}

void DoubleIntegrator::drift_jacobian(std::span<const double>, std::span<double> out) const {
  out[0] = 0.0;
  out[1] = 1.0;
  out[2] = 0.0;
  out[3] = 0.0;
}

void ScalarLinear::drift(std::span<const double> x, std::span<double> out) const {
  out[0] = a_ * x[0];
}

void ScalarLinear::control_field(std::size_t, std::span<const double>,
                                 std::span<double> out) const {
  out[0] = b_;
}

void ScalarLinear::drift_jacobian(std::span<const double>, std::span<double> out) const {
  out[0] = a_;
}

// Registry ------------------------------------------------------------------

namespace {

struct Registry {
  std::mutex mutex;
  std::map<std::string, SystemEntry> entries;

  Registry() {
    entries["van_der_pol"] = {{{"mu", 1.0}},
                              [](const ParamMap& p) { return std::make_shared<VanDerPol>(p.at("mu")); }};
    entries["pendulum"] = {{{"g", 9.81}, {"l", 1.0}, {"beta", 0.1}}, [](const ParamMap& p) {
                             if (p.at("l") <= 0.0) throw std::invalid_argument("pendulum: l must be > 0");
                             return std::make_shared<DampedPendulum>(p.at("g"), p.at("l"), p.at("beta"));
                           }};
    entries["integrator1d"] = {{}, [](const ParamMap&) { return std::make_shared<SingleIntegrator>(1); }};
    entries["integrator2d"] = {{}, [](const ParamMap&) { return std::make_shared<SingleIntegrator>(2); }};
    entries["double_integrator"] = {{}, [](const ParamMap&) { return std::make_shared<DoubleIntegrator>(); }};
    entries["scalar_linear"] = {{{"a", -1.0}, {"b", 1.0}}, [](const ParamMap& p) {
                                  return std::make_shared<ScalarLinear>(p.at("a"), p.at("b"));
                                }};
  }
};

Registry& registry() {
  static Registry r;
  return r;
}

}  // namespace

void register_system(const std::string& name, SystemEntry entry) {
  auto& r = registry();
  std::lock_guard lock(r.mutex);
  r.entries[name] = std::move(entry);
}

SystemPtr make_system(const std::string& name, const ParamMap& params) {
  auto& r = registry();
  SystemEntry entry;
  {
    std::lock_guard lock(r.mutex);
    auto it = r.entries.find(name);
    if (it == r.entries.end()) throw std::invalid_argument("unknown system '" + name + "'");
    entry = it->second;
  }
  ParamMap merged = entry.defaults;
  for (const auto& [key, value] : params) {
    if (!merged.contains(key)) {
      throw std::invalid_argument("system '" + name + "' has no parameter '" + key + "'");
    }
    if (!std::isfinite(value)) {
      throw std::invalid_argument("system '" + name + "': parameter '" + key + "' is not finite");
    }
    merged[key] = value;
  }
  return entry.factory(merged);
}

std::vector<std::string> registered_systems() {
  auto& r = registry();
  std::lock_guard lock(r.mutex);
  std::vector<std::string> names;
  for (const auto& [name, _] : r.entries) names.push_back(name);
  return names;
}

double linear_growth_constant(const ControlAffineSystem& sys, const BoxSet& box,
                              std::size_t samples, std::uint64_t seed) {
  const std::size_t d = sys.state_dim();
  if (box.dim() != d) throw std::invalid_argument("linear_growth_constant: box dimension mismatch");
  Rng rng(seed);
  std::vector<double> x(d), f(d);
  double worst = 0.0;
  auto norm = [](std::span<const double> v) {
    double s = 0.0;
    for (double e : v) s += e * e;
    return std::sqrt(s);
  };
  for (std::size_t s = 0; s < samples; ++s) {
    rng.fill_uniform(box, std::span<double>(x));
    const double scale = 1.0 + norm(x);
    sys.drift(x, f);
    worst = std::max(worst, norm(f) / scale);
    for (std::size_t i = 0; i < sys.control_dim(); ++i) {
      sys.control_field(i, x, f);
      worst = std::max(worst, norm(f) / scale);
    }
  }
  return worst;
}

}  // namespace reachot
