#pragma once

// Reference integrator for the coupled barrier-amplitude system
//   C1' = [(C1^2 - C1 C2) P - (C1^2 + C1 C2) D] / (2 t^q)
//   C2' = [(C2^2 - C1 C2) P + (C2^2 + C1 C2) D] / (2 t^q)
// used as an independent oracle against the closed-form profiles.

#include <cmath>
#include <utility>

namespace kb_test {

struct BarrierOde {
  double P, D, q;  // q = n - lambda

  std::pair<double, double> rhs(double t, double c1, double c2) const {
    const double tp = 2.0 * std::pow(t, q);
    const double d1 = ((c1 * c1 - c1 * c2) * P - (c1 * c1 + c1 * c2) * D) / tp;
    const double d2 = ((c2 * c2 - c1 * c2) * P + (c2 * c2 + c1 * c2) * D) / tp;
    return {d1, d2};
  }
};

// Classic fourth-order steps from t0 to t1.
inline std::pair<double, double> rk4_barrier(const BarrierOde& ode, double t0,
                                             double c1, double c2, double t1,
                                             int steps) {
  const double h = (t1 - t0) / steps;
  double t = t0;
  for (int k = 0; k < steps; ++k) {
    const auto k1 = ode.rhs(t, c1, c2);
    const auto k2 = ode.rhs(t + 0.5 * h, c1 + 0.5 * h * k1.first,
                            c2 + 0.5 * h * k1.second);
    const auto k3 = ode.rhs(t + 0.5 * h, c1 + 0.5 * h * k2.first,
                            c2 + 0.5 * h * k2.second);
    const auto k4 =
        ode.rhs(t + h, c1 + h * k3.first, c2 + h * k3.second);
    c1 += h / 6.0 * (k1.first + 2.0 * k2.first + 2.0 * k3.first + k4.first);
    c2 += h / 6.0 *
          (k1.second + 2.0 * k2.second + 2.0 * k3.second + k4.second);
    t += h;
  }
  return {c1, c2};
}

}  // namespace kb_test
