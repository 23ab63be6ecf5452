#include "reachot/kernel.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>

namespace reachot {

std::string to_string(KernelFamily f) { return f == KernelFamily::gaussian ? "gaussian" : "bump"; }

KernelFamily kernel_family_from_string(const std::string& s) {
  if (s == "gaussian") return KernelFamily::gaussian;
  if (s == "bump") return KernelFamily::bump;
  throw std::invalid_argument("unknown kernel family '" + s + "' (expected gaussian|bump)");
}

// BumpTable -----------------------------------------------------------------

namespace {

using Quad = boost::math::quadrature::gauss_kronrod<double, 31>;
// Fixed rule for the inner (transverse) integral. The integrand is smooth on
// the whole interval, and nesting two adaptive rules costs minutes for d >= 2.
using InnerQuad = boost::math::quadrature::gauss<double, 60>;
constexpr unsigned kMaxDepth = 12;
constexpr double kQuadTol = 1e-11;
// Below this fraction of K(0) the table is set to zero. K is radially
// decreasing, and near r = 2 the adaptive quadrature otherwise chases
// denormal-sized integrands.
constexpr double kNegligible = 1e-30;

// Surface area of the unit sphere in R^n (n >= 1); n = 1 gives 2.
double sphere_area(std::size_t n) {
  const double h = 0.5 * static_cast<double>(n);
  return 2.0 * std::pow(std::numbers::pi, h) / std::tgamma(h);
}

// Unnormalised bump exp(-1/(1-q2)) as a function of q2 = |x|^2.
inline double raw_bump(double q2) { return q2 < 1.0 ? std::exp(-1.0 / (1.0 - q2)) : 0.0; }

}  // namespace

BumpTable::BumpTable(std::size_t dim) : dim_(dim) {
  if (dim == 0) throw std::invalid_argument("BumpTable: dimension must be >= 1");
  const double radial_mass = Quad::integrate(
      [&](double r) { return std::pow(r, static_cast<double>(dim - 1)) * raw_bump(r * r); }, 0.0,
      1.0, kMaxDepth, kQuadTol);
  norm_ = 1.0 / (sphere_area(dim) * radial_mass);

  spacing_ = 2.0 / static_cast<double>(kNodes - 1);
  values_.resize(kNodes);
  derivs_.resize(kNodes);
  const double c2 = norm_ * norm_;
  const double shell = dim >= 2 ? sphere_area(dim - 1) : 1.0;

  // Points y = s e_1 + rho w with w a unit vector orthogonal to e_1. The two
  // factors are the bump at y and at y - r e_1; d/dr of the second factor is
  // bump(q2) * 2 (s - r) / (1 - q2)^2.
  for (std::size_t j = 0; j < kNodes; ++j) {
    const double r = static_cast<double>(j) * spacing_;
    if (j == kNodes - 1 || (j > 0 && values_[j - 1] < kNegligible * values_[0])) {
      std::fill(values_.begin() + static_cast<std::ptrdiff_t>(j), values_.end(), 0.0);
      std::fill(derivs_.begin() + static_cast<std::ptrdiff_t>(j), derivs_.end(), 0.0);
      break;
    }
    const double s_lo = r - 1.0;
    const double s_hi = 1.0;
    auto slice = [&](double s, bool deriv) {
      const double ds = s - r;
      const double a2 = s * s;
      const double b2 = ds * ds;
      const double rho_max2 = std::min(1.0 - a2, 1.0 - b2);
      if (rho_max2 <= 0.0) return 0.0;
      auto point = [&](double rho2) {
        const double qa = a2 + rho2;
        const double qb = b2 + rho2;
        if (qa >= 1.0 || qb >= 1.0) return 0.0;
        const double v = raw_bump(qa) * raw_bump(qb);
        if (!deriv) return v;
        const double w = 1.0 - qb;
        return v * 2.0 * ds / (w * w);
      };
      if (dim == 1) return point(0.0);
      const double p = static_cast<double>(dim - 2);
      return shell * InnerQuad::integrate(
                         [&](double rho) { return std::pow(rho, p) * point(rho * rho); }, 0.0,
                         std::sqrt(rho_max2));
    };
    values_[j] = c2 * Quad::integrate([&](double s) { return slice(s, false); }, s_lo, s_hi,
                                      kMaxDepth, kQuadTol);
    derivs_[j] = c2 * Quad::integrate([&](double s) { return slice(s, true); }, s_lo, s_hi,
                                      kMaxDepth, kQuadTol);
  }
  derivs_[0] = 0.0;
}

double BumpTable::mollifier(double r) const { return norm_ * raw_bump(r * r); }

void BumpTable::evaluate(double r, double& value, double& deriv) const {
  if (r >= 2.0) {
    value = 0.0;
    deriv = 0.0;
    return;
  }
  r = std::max(r, 0.0);
  const double pos = r / spacing_;
  std::size_t j = static_cast<std::size_t>(pos);
  if (j >= kNodes - 1) j = kNodes - 2;
  const double t = pos - static_cast<double>(j);
  const double h = spacing_;
  const double y0 = values_[j], y1 = values_[j + 1];
  const double m0 = derivs_[j] * h, m1 = derivs_[j + 1] * h;
  const double t2 = t * t, t3 = t2 * t;
  value = (2 * t3 - 3 * t2 + 1) * y0 + (t3 - 2 * t2 + t) * m0 + (-2 * t3 + 3 * t2) * y1 +
          (t3 - t2) * m1;
  const double dvdt = (6 * t2 - 6 * t) * y0 + (3 * t2 - 4 * t + 1) * m0 + (-6 * t2 + 6 * t) * y1 +
                      (3 * t2 - 2 * t) * m1;
  deriv = dvdt / h;
}

double BumpTable::value(double r) const {
  double v, dv;
  evaluate(r, v, dv);
  return v;
}

double BumpTable::derivative(double r) const {
  double v, dv;
  evaluate(r, v, dv);
  return dv;
}

std::shared_ptr<const BumpTable> BumpTable::get(std::size_t dim) {
  static std::mutex mutex;
  static std::map<std::size_t, std::shared_ptr<const BumpTable>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[dim];
  if (!slot) slot = std::make_shared<const BumpTable>(dim);
  return slot;
}

// KernelSpec ----------------------------------------------------------------

KernelSpec::KernelSpec(KernelFamily family, double delta, std::size_t dim)
    : family_(family), delta_(delta), dim_(dim) {
  if (!(delta > 0.0) || !std::isfinite(delta)) {
    throw std::invalid_argument("kernel width delta must be positive and finite");
  }
  if (dim == 0) throw std::invalid_argument("kernel dimension must be >= 1");
  const double dd = static_cast<double>(dim);
  if (family == KernelFamily::gaussian) {
    gauss_scale_ = std::pow(4.0 * std::numbers::pi * delta * delta, -0.5 * dd);
  } else {
    bump_scale_ = std::pow(delta, -dd);
    bump_ = BumpTable::get(dim);
  }
}

double KernelSpec::peak() const { return radial(0.0); }

double KernelSpec::radial(double r2) const {
  if (family_ == KernelFamily::gaussian) {
    return gauss_scale_ * std::exp(-r2 / (4.0 * delta_ * delta_));
  }
  return bump_scale_ * bump_->value(std::sqrt(r2) / delta_);
}

double KernelSpec::value_and_grad(std::span<const double> z, std::span<double> grad) const {
  double r2 = 0.0;
  for (std::size_t k = 0; k < dim_; ++k) r2 += z[k] * z[k];
  if (family_ == KernelFamily::gaussian) {
    const double v = gauss_scale_ * std::exp(-r2 / (4.0 * delta_ * delta_));
    const double s = -v / (2.0 * delta_ * delta_);
    for (std::size_t k = 0; k < dim_; ++k) grad[k] = s * z[k];
    return v;
  }
  const double r = std::sqrt(r2);
  double v, dv;
  bump_->evaluate(r / delta_, v, dv);
  v *= bump_scale_;
  if (r == 0.0 || dv == 0.0) {
    for (std::size_t k = 0; k < dim_; ++k) grad[k] = 0.0;
  } else {
    const double s = bump_scale_ * dv / (delta_ * r);
    for (std::size_t k = 0; k < dim_; ++k) grad[k] = s * z[k];
  }
  return v;
}

void KernelSpec::check(std::span<const double> z) const {
  if (z.size() != dim_) {
    throw std::invalid_argument("kernel displacement has length " + std::to_string(z.size()) +
                                ", expected " + std::to_string(dim_));
  }
}

double KernelSpec::interaction(std::span<const double> z) const {
  check(z);
  double r2 = 0.0;
  for (double v : z) r2 += v * v;
  return radial(r2);
}

void KernelSpec::interaction_grad(std::span<const double> z, std::span<double> out) const {
  check(z);
  if (out.size() != dim_) throw std::invalid_argument("gradient buffer has wrong length");
  value_and_grad(z, out);
}

std::vector<double> KernelSpec::interaction_grad(std::span<const double> z) const {
  std::vector<double> out(dim_);
  interaction_grad(z, out);
  return out;
}

}  // namespace reachot
