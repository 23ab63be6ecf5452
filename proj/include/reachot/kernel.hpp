#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace reachot {

enum class KernelFamily { gaussian, bump };

std::string to_string(KernelFamily f);
KernelFamily kernel_family_from_string(const std::string& s);

/// Tabulated radial self-convolution of the unit bump mollifier in R^d,
/// K_1(r) = (k * k)(r e_1) on r in [0, 2], with its derivative. Evaluated by
/// cubic Hermite interpolation, so `derivative` is exactly d/dr of `value`.
class BumpTable {
 public:
  static constexpr std::size_t kNodes = 2048;

  explicit BumpTable(std::size_t dim);

  std::size_t dim() const { return dim_; }
  double value(double r) const;
  double derivative(double r) const;

  /// Normalisation constant c of k(x) = c exp(-1 / (1 - |x|^2)).
  double normalization() const { return norm_; }
  /// Unit bump mollifier k(x) with |x| = r.
  double mollifier(double r) const;

  /// Interpolated value and radial derivative in one lookup.
  void evaluate(double r, double& value, double& deriv) const;

  /// Shared, lazily built table for dimension d.
  static std::shared_ptr<const BumpTable> get(std::size_t dim);

 private:
  std::size_t dim_;
  double norm_;
  double spacing_;
  std::vector<double> values_;
  std::vector<double> derivs_;
};

/// Interaction kernel K_delta = k_delta * k_delta for a mollifier family.
///
/// gaussian: k_delta is the isotropic normal with variance delta^2, so K_delta
/// is the normal with variance 2 delta^2, (4 pi delta^2)^{-d/2} exp(-|z|^2 / 4 delta^2).
/// bump: k_delta is the compactly supported C-infinity bump of radius delta and
/// K_delta vanishes for |z| >= 2 delta.
class KernelSpec {
 public:
  KernelSpec(KernelFamily family, double delta, std::size_t dim);

  KernelFamily family() const { return family_; }
  double delta() const { return delta_; }
  std::size_t dim() const { return dim_; }

  double interaction(std::span<const double> z) const;
  void interaction_grad(std::span<const double> z, std::span<double> out) const;
  std::vector<double> interaction_grad(std::span<const double> z) const;

  /// K_delta(0).
  double peak() const;

  /// K_delta as a function of |z|^2.
  double radial(double r2) const;
  /// Returns K(z) and writes grad K(z) into `grad`. No size checks.
  double value_and_grad(std::span<const double> z, std::span<double> grad) const;

 private:
  void check(std::span<const double> z) const;

  KernelFamily family_;
  double delta_;
  std::size_t dim_;
  double gauss_scale_ = 0.0;  // (4 pi delta^2)^{-d/2}
  double bump_scale_ = 0.0;   // delta^{-d}
  std::shared_ptr<const BumpTable> bump_;
};

}  // namespace reachot
