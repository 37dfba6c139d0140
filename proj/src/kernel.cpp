#include "kb/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace kb {

AngularKernel::AngularKernel(Form f, double p, std::vector<double> tab,
                             bool sym)
    : form_(f), param_(p), table_(std::move(tab)), symmetrized_(sym) {}

AngularKernel AngularKernel::constant(double c) {
  if (!(c >= 0.0))
    throw std::domain_error("AngularKernel: constant must be nonnegative");
  return AngularKernel(Form::Constant, c, {}, false);
}

AngularKernel AngularKernel::power(double exponent) {
  if (!(exponent >= 0.0))
    throw std::domain_error("AngularKernel: power exponent must be >= 0");
  return AngularKernel(Form::Power, exponent, {}, false);
}

AngularKernel AngularKernel::tabulated(std::vector<double> samples) {
  if (samples.size() < 2)
    throw std::domain_error("AngularKernel: need at least 2 samples");
  for (double v : samples)
    if (!(v >= 0.0) || !std::isfinite(v))
      throw std::domain_error("AngularKernel: samples must be finite and >= 0");
  return AngularKernel(Form::Tabulated, 0.0, std::move(samples), false);
}

double AngularKernel::base(double s) const {
  switch (form_) {
    case Form::Constant:
      return param_;
    case Form::Power:
      return std::pow(std::abs(s), param_);
    case Form::Tabulated: {
      const std::size_t m = table_.size();
      const double pos = (s + 1.0) * 0.5 * static_cast<double>(m - 1);
      if (pos <= 0.0) return table_.front();
      if (pos >= static_cast<double>(m - 1)) return table_.back();
      const auto k = static_cast<std::size_t>(pos);
      const double w = pos - static_cast<double>(k);
      return (1.0 - w) * table_[k] + w * table_[k + 1];
    }
  }
  return 0.0;
}

double AngularKernel::operator()(double s) const {
  if (!symmetrized_) return base(s);
  return s <= 0.0 ? base(s) + base(-s) : 0.0;
}

AngularKernel AngularKernel::symmetrized() const {
  AngularKernel out = *this;
  out.symmetrized_ = true;
  return out;
}

std::vector<double> AngularKernel::breakpoints() const {
  std::vector<double> pts;
  if (form_ == Form::Power) pts.push_back(0.0);
  if (form_ == Form::Tabulated) {
    const std::size_t m = table_.size();
    for (std::size_t k = 1; k + 1 < m; ++k)
      pts.push_back(-1.0 + 2.0 * static_cast<double>(k) /
                               static_cast<double>(m - 1));
  }
  if (symmetrized_) {
    std::vector<double> mirrored;
    mirrored.push_back(0.0);
    for (double s : pts) {
      mirrored.push_back(s);
      mirrored.push_back(-s);
    }
    pts = std::move(mirrored);
  }
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  return pts;
}

double angular_norm(const AngularKernel& b, int n) {
  if (n < 2) throw std::domain_error("angular_norm: dimension must be >= 2");
  // theta-substitution: s = cos(theta), weight sin^{n-2}(theta).
  const auto integrand = [&](double th) {
    const double s = std::cos(th);
    const double w = n == 2 ? 1.0 : std::pow(std::sin(th), n - 2);
    return b(s) * w;
  };
  std::vector<double> th_breaks;
  for (double s : b.breakpoints()) th_breaks.push_back(std::acos(s));
  const double prefactor = n == 2 ? 2.0 : sphere_area(n - 1);
  const double integral = adaptive_simpson_split(
      integrand, 0.0, std::numbers::pi, th_breaks, 1e-10);
  // n = 2: the two arcs above/below the axis contribute equally.
  return prefactor * integral;
}

CollisionKernel::CollisionKernel(double lambda, AngularKernel angular, int n,
                                 KernelMode mode)
    : lambda_(lambda), angular_(std::move(angular)), n_(n), mode_(mode) {
  if (n != 2 && n != 3)
    throw std::domain_error("CollisionKernel: runtime dimension must be 2 or 3");
  const double upper = static_cast<double>(n) - 1.0;
  if (mode == KernelMode::NearMaxwellian) {
    if (!(lambda >= 0.0 && lambda < upper))
      throw std::domain_error(
          "CollisionKernel: assumption (A.1) requires 0 <= lambda < n-1 "
          "in near-Maxwellian mode (lambda=" +
          std::to_string(lambda) + ", n=" + std::to_string(n) + ")");
  } else {
    if (!(lambda >= -1.0 && lambda < upper))
      throw std::domain_error(
          "CollisionKernel: near-vacuum mode requires -1 <= lambda < n-1 "
          "(lambda=" +
          std::to_string(lambda) + ", n=" + std::to_string(n) + ")");
  }
  bnorm_ = kb::angular_norm(angular_, n_);
  if (!std::isfinite(bnorm_))
    throw QuadratureError("CollisionKernel: angular kernel not integrable");
}

}  // namespace kb
