#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <vector>

namespace kb {

/// Point in position or velocity space. Only the first `n` components are
/// meaningful; trailing components must stay zero so dot/norm helpers can
/// run over the full array without branching on the dimension.
using Vec = std::array<double, 3>;

inline Vec vec2(double a, double b) { return {a, b, 0.0}; }
inline Vec vec3(double a, double b, double c) { return {a, b, c}; }

inline double dot(const Vec& a, const Vec& b) {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

inline double norm2(const Vec& a) { return dot(a, a); }
inline double norm(const Vec& a) { return std::sqrt(norm2(a)); }

inline Vec operator+(const Vec& a, const Vec& b) {
  return {a[0] + b[0], a[1] + b[1], a[2] + b[2]};
}
inline Vec operator-(const Vec& a, const Vec& b) {
  return {a[0] - b[0], a[1] - b[1], a[2] - b[2]};
}
inline Vec operator*(double c, const Vec& a) {
  return {c * a[0], c * a[1], c * a[2]};
}

/// Surface measure of the unit sphere S^{n-1}: 2 pi^{n/2} / Gamma(n/2).
double sphere_area(int n);

/// Volume of the unit ball in R^n.
double ball_volume(int n);

/// Raised when an adaptive rule fails to reach its tolerance.
class QuadratureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Adaptive Simpson on [a,b] with relative tolerance. `abs_floor` guards
/// integrals that are identically (or nearly) zero.
double adaptive_simpson(const std::function<double(double)>& f, double a,
                        double b, double rel_tol, double abs_floor = 1e-300,
                        int max_depth = 48);

/// Same, but split at interior breakpoints (integrand kinks).
double adaptive_simpson_split(const std::function<double(double)>& f, double a,
                              double b, const std::vector<double>& breaks,
                              double rel_tol, double abs_floor = 1e-300);

/// Gauss-Legendre nodes and weights on [-1,1].
void gauss_legendre(int m, std::vector<double>& x, std::vector<double>& w);

}  // namespace kb
