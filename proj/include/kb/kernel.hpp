#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "kb/numerics.hpp"

namespace kb {

/// Which admissible range of lambda applies. Near-Maxwellian runs require
/// 0 <= lambda < n-1 (assumption A.1); the near-vacuum existence result
/// relaxes this to -1 <= lambda < n-1.
enum class KernelMode { NearVacuum, NearMaxwellian };

/// Angular part b(s), s = uhat.sigma in [-1,1]. Three base forms plus an
/// optional symmetrization wrapper bbar(s) = (b(s)+b(-s)) 1{s<=0}.
class AngularKernel {
 public:
  enum class Form { Constant, Power, Tabulated };

  static AngularKernel constant(double c);
  static AngularKernel power(double exponent);  // b(s) = |s|^k, k >= 0
  /// Piecewise-linear interpolation of uniformly spaced samples on [-1,1]
  /// (endpoints included). Keeps b >= 0 iff all samples are >= 0.
  static AngularKernel tabulated(std::vector<double> samples);

  double operator()(double s) const;

  /// (b(s)+b(-s)) restricted to s <= 0; preserves the L1(S^{n-1}) norm.
  AngularKernel symmetrized() const;
  bool is_symmetrized() const { return symmetrized_; }
  Form form() const { return form_; }

  /// Interior kink locations, used to split quadrature intervals.
  std::vector<double> breakpoints() const;

 private:
  AngularKernel(Form f, double p, std::vector<double> tab, bool sym);
  double base(double s) const;

  Form form_;
  double param_ = 0.0;
  std::vector<double> table_;
  bool symmetrized_ = false;
};

/// ||b||_{L1(S^{n-1})} = |S^{n-2}| * int_{-1}^{1} b(s)(1-s^2)^{(n-3)/2} ds,
/// evaluated as int_0^pi b(cos th) sin^{n-2}(th) dth so the n=2 endpoint
/// singularity never appears. Adaptive quadrature, relative tol 1e-10.
double angular_norm(const AngularKernel& b, int n);

/// Full collision kernel B(|u|, uhat.sigma) = |u|^{-lambda} b(uhat.sigma).
class CollisionKernel {
 public:
  CollisionKernel(double lambda, AngularKernel angular, int n, KernelMode mode);

  double lambda() const { return lambda_; }
  int dim() const { return n_; }
  KernelMode mode() const { return mode_; }
  const AngularKernel& angular() const { return angular_; }

  /// Cached ||b||_{L1(S^{n-1})}.
  double angular_norm() const { return bnorm_; }

 private:
  double lambda_;
  AngularKernel angular_;
  int n_;
  KernelMode mode_;
  double bnorm_;
};

inline AngularKernel symmetrize(const AngularKernel& b) {
  return b.symmetrized();
}

inline double angular_norm(const CollisionKernel& k) {
  return k.angular_norm();
}

}  // namespace kb
