#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace reachot {

using ParamMap = std::map<std::string, double>;

/// Axis-aligned box [lower, upper] in R^n. Used for both the control set U and
/// the initial set Omega.
class BoxSet {
 public:
  BoxSet() = default;
  BoxSet(std::vector<double> lower, std::vector<double> upper);

  static BoxSet cube(std::size_t dim, double lo, double hi);

  std::size_t dim() const { return lower_.size(); }
  const std::vector<double>& lower() const { return lower_; }
  const std::vector<double>& upper() const { return upper_; }

  bool contains(std::span<const double> p) const;

  /// Euclidean projection (componentwise clamp). `out` may alias `p`.
  void project(std::span<const double> p, std::span<double> out) const;
  std::vector<double> project(std::span<const double> p) const;

  bool operator==(const BoxSet&) const = default;

 private:
  std::vector<double> lower_;
  std::vector<double> upper_;
};

/// dx/dt = f0(x) + sum_i u_i f_i(x).
///
/// Jacobians are row-major d x d. Control fields default to constant in x;
/// systems with state-dependent control fields override
/// `control_field_jacobian` and `control_fields_constant`.
class ControlAffineSystem {
 public:
  virtual ~ControlAffineSystem() = default;

  virtual std::string name() const = 0;
  virtual std::size_t state_dim() const = 0;
  virtual std::size_t control_dim() const = 0;
  virtual ParamMap params() const = 0;

  virtual void drift(std::span<const double> x, std::span<double> out) const = 0;
  virtual void control_field(std::size_t i, std::span<const double> x,
                             std::span<double> out) const = 0;
  virtual void drift_jacobian(std::span<const double> x,
                              std::span<double> out) const = 0;
  virtual void control_field_jacobian(std::size_t i, std::span<const double> x,
                                      std::span<double> out) const;
  virtual bool control_fields_constant() const { return true; }

  // Unchecked kernels used by the integrators. Sizes are the caller's problem.
  void rhs_into(std::span<const double> x, std::span<const double> u,
                std::span<double> out) const;
  void jacobian_into(std::span<const double> x, std::span<const double> u,
                     std::span<double> out) const;
  /// G(x) = [f_1 ... f_m], row-major d x m.
  void control_matrix_into(std::span<const double> x, std::span<double> out) const;

  // Checked entry points.
  std::vector<double> rhs(std::span<const double> x, std::span<const double> u) const;
  std::vector<double> state_jacobian(std::span<const double> x,
                                     std::span<const double> u) const;

 protected:
  void check_dims(std::span<const double> x, std::span<const double> u) const;
};

using SystemPtr = std::shared_ptr<const ControlAffineSystem>;

class VanDerPol final : public ControlAffineSystem {
 public:
  explicit VanDerPol(double mu = 1.0) : mu_(mu) {}
  std::string name() const override { return "van_der_pol"; }
  std::size_t state_dim() const override { return 2; }
  std::size_t control_dim() const override { return 1; }
  ParamMap params() const override { return {{"mu", mu_}}; }
  void drift(std::span<const double> x, std::span<double> out) const override;
  void control_field(std::size_t i, std::span<const double> x,
                     std::span<double> out) const override;
  void drift_jacobian(std::span<const double> x, std::span<double> out) const override;

 private:
  double mu_;
};

class DampedPendulum final : public ControlAffineSystem {
 public:
  DampedPendulum(double g = 9.81, double length = 1.0, double beta = 0.1)
      : g_(g), length_(length), beta_(beta) {}
  std::string name() const override { return "pendulum"; }
  std::size_t state_dim() const override { return 2; }
  std::size_t control_dim() const override { return 1; }
  ParamMap params() const override { return {{"g", g_}, {"l", length_}, {"beta", beta_}}; }
  void drift(std::span<const double> x, std::span<double> out) const override;
  void control_field(std::size_t i, std::span<const double> x,
                     std::span<double> out) const override;
  void drift_jacobian(std::span<const double> x, std::span<double> out) const override;

 private:
  double g_;
  double length_;
  double beta_;
};

/// dx/dt = u, x in R^dim.
class SingleIntegrator final : public ControlAffineSystem {
 public:
  explicit SingleIntegrator(std::size_t dim = 1) : dim_(dim) {}
  std::string name() const override { return dim_ == 1 ? "integrator1d" : "integrator2d"; }
  std::size_t state_dim() const override { return dim_; }
  std::size_t control_dim() const override { return dim_; }
  ParamMap params() const override { return {}; }
  void drift(std::span<const double> x, std::span<double> out) const override;
  void control_field(std::size_t i, std::span<const double> x,
                     std::span<double> out) const override;
  void drift_jacobian(std::span<const double> x, std::span<double> out) const override;

 private:
  std::size_t dim_;
};

/// x1' = x2, x2' = u.
class DoubleIntegrator final : public ControlAffineSystem {
 public:
  std::string name() const override { return "double_integrator"; }
  std::size_t state_dim() const override { return 2; }
  std::size_t control_dim() const override { return 1; }
  ParamMap params() const override { return {}; }
  void drift(std::span<const double> x, std::span<double> out) const override;
  void control_field(std::size_t i, std::span<const double> x,
                     std::span<double> out) const override;
  void drift_jacobian(std::span<const double> x, std::span<double> out) const override;
};

/// Scalar LTI system x' = a x + b u.
class ScalarLinear final : public ControlAffineSystem {
 public:
  ScalarLinear(double a = -1.0, double b = 1.0) : a_(a), b_(b) {}
  std::string name() const override { return "scalar_linear"; }
  std::size_t state_dim() const override { return 1; }
  std::size_t control_dim() const override { return 1; }
  ParamMap params() const override { return {{"a", a_}, {"b", b_}}; }
  void drift(std::span<const double> x, std::span<double> out) const override;
  void control_field(std::size_t i, std::span<const double> x,
                     std::span<double> out) const override;
  void drift_jacobian(std::span<const double> x, std::span<double> out) const override;

 private:
  double a_;
  double b_;
};

// Registry ------------------------------------------------------------------

/// Factory receives the user-supplied parameters merged over the defaults.
using SystemFactory = std::function<SystemPtr(const ParamMap&)>;

struct SystemEntry {
  ParamMap defaults;
  SystemFactory factory;
};

/// Registers a system under `name`. Replaces any previous entry.
void register_system(const std::string& name, SystemEntry entry);

/// Builds a registered system. Unknown names or parameter keys throw
/// std::invalid_argument.
SystemPtr make_system(const std::string& name, const ParamMap& params = {});

std::vector<std::string> registered_systems();

// Diagnostics ---------------------------------------------------------------

/// max over sampled x in `box` and fields f_0..f_m of |f_i(x)| / (1 + |x|).
/// A finite witness of linear growth on the box, not a global bound.
double linear_growth_constant(const ControlAffineSystem& sys, const BoxSet& box,
                              std::size_t samples, std::uint64_t seed);

}  // namespace reachot
