#include "kb/numerics.hpp"

#include <numbers>

namespace kb {

double sphere_area(int n) {
  if (n < 2) throw std::domain_error("sphere_area: dimension must be >= 2");
  const double half = 0.5 * n;
  return 2.0 * std::pow(std::numbers::pi, half) / std::tgamma(half);
}

double ball_volume(int n) {
  if (n < 1) throw std::domain_error("ball_volume: dimension must be >= 1");
  const double half = 0.5 * n;
  return std::pow(std::numbers::pi, half) / std::tgamma(half + 1.0);
}

namespace {

double simpson(double fa, double fm, double fb, double a, double b) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

double adapt(const std::function<double(double)>& f, double a, double b,
             double fa, double fm, double fb, double whole, double tol,
             int depth, double& unresolved) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = simpson(fa, flm, fm, a, m);
  const double right = simpson(fm, frm, fb, m, b);
  const double err = left + right - whole;
  if (std::abs(err) <= 15.0 * tol) return left + right + err / 15.0;
  if (depth <= 0) {
    // A point discontinuity pins the error estimate to the shrinking
    // interval width; accept the leaf and account for it at the top.
    unresolved += std::abs(err);
    return left + right;
  }
  return adapt(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, unresolved) +
         adapt(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, unresolved);
}

}  // namespace

double adaptive_simpson(const std::function<double(double)>& f, double a,
                        double b, double rel_tol, double abs_floor,
                        int max_depth) {
  if (a == b) return 0.0;
  const double fa = f(a);
  const double fb = f(b);
  const double fm = f(0.5 * (a + b));
  const double whole = simpson(fa, fm, fb, a, b);
  const double tol = std::max(std::abs(whole) * rel_tol, abs_floor);
  double unresolved = 0.0;
  const double result =
      adapt(f, a, b, fa, fm, fb, whole, tol, max_depth, unresolved);
  if (unresolved > 50.0 * std::max(std::abs(result) * rel_tol, abs_floor))
    throw QuadratureError("adaptive_simpson: tolerance not reached");
  return result;
}

double adaptive_simpson_split(const std::function<double(double)>& f, double a,
                              double b, const std::vector<double>& breaks,
                              double rel_tol, double abs_floor) {
  std::vector<double> pts{a};
  for (double s : breaks)
    if (s > a && s < b) pts.push_back(s);
  pts.push_back(b);
  std::sort(pts.begin(), pts.end());
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i)
    total += adaptive_simpson(f, pts[i], pts[i + 1], rel_tol, abs_floor);
  return total;
}

void gauss_legendre(int m, std::vector<double>& x, std::vector<double>& w) {
  if (m < 1) throw std::domain_error("gauss_legendre: need m >= 1 nodes");
  x.assign(m, 0.0);
  w.assign(m, 0.0);
  const int half = (m + 1) / 2;
  for (int i = 0; i < half; ++i) {
    // Chebyshev initial guess, then Newton on P_m.
    double z = std::cos(std::numbers::pi * (i + 0.75) / (m + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < m; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
      }
      pp = m * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / pp;
      z -= dz;
      if (std::abs(dz) < 1e-15) break;
    }
    x[i] = -z;
    x[m - 1 - i] = z;
    w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
    w[m - 1 - i] = w[i];
  }
}

}  // namespace kb
