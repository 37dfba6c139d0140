#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "kb/collision.hpp"

namespace kb {

/// Barrier profiles cease to exist past a finite horizon.
class BlowupError : public std::runtime_error {
 public:
  BlowupError(const std::string& msg, double critical_t)
      : std::runtime_error(msg), critical_t(critical_t) {}
  double critical_t;
};

/// Initial data too large for the fixed-point construction.
class SmallnessError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// k_{alpha,beta} = sqrt(pi) alpha^{-1/2} ||b|| (|S^{n-1}|/(n-lambda-1)
///                  + C_n beta^{-n/2}),  C_n = pi^{n/2}.
/// Requires beta > 0; the infinite-mass case has no such constant.
double k_alpha_beta(double alpha, double beta, const CollisionKernel& k);

/// Smaller root of f0_norm + k C^2 = C, computed in cancellation-free form
/// C = 2 f0_norm / (1 + sqrt(1 - 4 k f0_norm)). Throws SmallnessError when
/// f0_norm > 1/(4k).
double vacuum_fixed_point(double f0_norm, double k_ab);

/// Time-independent envelope pair for the small-data regime: l0 = 0 and
/// u0# = C M_{alpha,beta}.
struct VacuumBarrier {
  double alpha = 1.0;
  double beta = 1.0;
  double f0_norm = 0.0;
  double k_ab = 0.0;
  double C = 0.0;       // fixed-point amplitude
  double Cn = 0.0;      // dimensional constant inside k_ab

  static VacuumBarrier build(double alpha, double beta, double f0_norm,
                             const CollisionKernel& kernel);
};

/// phi_{alpha,beta}(t,x,v) =
///   ||b|| int exp(-alpha|x+u|^2 - beta|v-u/t|^2) |u|^{-lambda} du,
/// integrated on a u-lattice aligned so u = 0 is a cell center, with the
/// same singular-cell average used by loss_rate, truncated where the
/// position Gaussian drops below 1e-12. Nu = 0 picks the resolution from
/// the Gaussian scales.
double phi_eval(double alpha, double beta, double t, const Vec& x,
                const Vec& v, const CollisionKernel& k, int Nu = 0);

struct PhiSupOptions {
  int Nu = 0;             // per-axis nodes for phi_eval (0 = auto)
  double sup_margin = 1.05;
};

/// Sup norms of phi_1, phi_2, phi_1 + phi_2 and phi_1 - phi_2 over
/// t >= 1, x, v, estimated on a sample lattice (exploiting rotational
/// symmetry) with one local refinement pass; results carry the
/// `sup_margin` safety factor.
struct PhiSups {
  double phi1 = 0.0;
  double phi2 = 0.0;
  double sum = 0.0;   // ||phi_1 + phi_2||
  double diff = 0.0;  // ||phi_1 - phi_2||
};
PhiSups phi_sup_norms(const MaxwellianSpec& M1, const MaxwellianSpec& M2,
                      const CollisionKernel& k, const PhiSupOptions& opt = {});

/// d(M1,M2) = |C2-C1| + |alpha2-alpha1| + |beta2-beta1|; the shift frames
/// must agree.
double maxwellian_distance(const MaxwellianSpec& M1, const MaxwellianSpec& M2);

/// k^2 = (||phi1+phi2|| - ||phi1-phi2||)/(||phi1+phi2|| + ||phi1-phi2||)
///       * C1(1) C2(1).
double barrier_k2(double C1_init, double C2_init, const PhiSups& sups);

/// Ratio (C2(1)+k)/(C2(1)-k) / exp(k (P+D)/(n-lambda-1)); > 1 means the
/// upper profile stays bounded for all t >= 1, +infinity when C2(1) = k.
double boundedness_margin(double C2_init, double k, double P, double D,
                          double mu);

struct SandwichVerdict {
  bool pass = false;
  bool distance_ok = false;
  double d1 = 0.0, d2 = 0.0;
  double worst_lower = 0.0;  // max of M1 - f0 (positive = violation)
  double worst_upper = 0.0;  // max of f0 - M2
  std::size_t worst_ix = 0, worst_iv = 0;
};

/// Pointwise check M1(x,v) <= f0(x+v,v) <= M2(x,v), evaluated with the
/// substitution y = x + v so the data field is read at its own nodes and
/// the envelopes absorb the shift analytically.
SandwichVerdict sandwich_check(const Field& f0_lab, const MaxwellianSpec& M1,
                               const MaxwellianSpec& M2,
                               const MaxwellianSpec& M, double eps);

/// Near-local-equilibrium barrier pair l0#(t) = C1(t) M_{a1,b1},
/// u0#(t) = C2(t) M_{a2,b2} with the closed-form amplitude profiles.
struct MaxwellianBarrier {
  MaxwellianSpec M, M1, M2;  // target and sandwich envelopes (lab shift)
  double eps = 0.0;
  PhiSups sups;
  double k2 = 0.0, k = 0.0;
  double mu = 0.0;      // n - lambda - 1
  double kappa = 0.0;   // k (P+D)/mu
  double margin = 0.0;  // boundedness margin
  double critical_t = std::numeric_limits<double>::infinity();
  double t_exponent = 0.0;  // n - lambda

  double c1(double t) const;
  double c2(double t) const;

  static MaxwellianBarrier build(const MaxwellianSpec& M,
                                 const MaxwellianSpec& M1,
                                 const MaxwellianSpec& M2, double eps,
                                 const CollisionKernel& kernel,
                                 const PhiSupOptions& opt = {});
};

/// Time integral of |Q+#| against the Maxwellian-weighted bound.
struct GainIntegralSample {
  std::size_t ix = 0, iv = 0;
  double integral = 0.0;
  double bound = 0.0;
  double ratio = 0.0;
};
struct GainIntegralReport {
  double worst_ratio = 0.0;
  double k_ab = 0.0;
  bool pass = false;
  std::vector<GainIntegralSample> samples;
};
struct GainIntegralOptions {
  double T = 10.0;
  int Nt = 128;
  int n_samples = 64;
  std::uint64_t seed = 2026;
  unsigned workers = 1;
  // Sample only cells with alpha|x|^2 + beta|v|^2 <= arg_cap: beyond it
  // the envelope varies by large factors across one cell and multilinear
  // interpolation inflates the (exponentially small) integrand, so the
  // pointwise ratio carries no information about the true inequality.
  double arg_cap = 5.0;
};

/// Integrates |Q+#(f,g)(tau, x, v)| over tau in [0,T] at sampled cells of
/// time-constant trajectory-frame inputs and compares with
/// k_{alpha,beta} M_{alpha,beta}(x,v) ||f#|| ||g#||.
GainIntegralReport gain_time_integral_check(const Field& f_sharp,
                                            const Field& g_sharp,
                                            const CollisionQuadrature& q,
                                            double alpha, double beta,
                                            const GainIntegralOptions& opt);

/// Beginning-condition verdicts (implemented with the solver's mild step).
struct BeginningOptions {
  double T = 5.0;
  int Nt = 64;
  unsigned workers = 1;
  // Ordering slack relative to the u0 scale. Quadrature-limited: cell
  // interpolation overestimates envelope tails, so roundoff-level slack is
  // not attainable on desk grids.
  double tol_rel = 1e-3;
  double qtol_floor = 1e-12;  // absolute floor for quadrature tolerances
  int n_time_samples = 4;
  int n_space_samples = 25;
  int phi_Nu = 0;
};

struct InequalityPoint {
  double t = 0.0;
  Vec x{0, 0, 0}, v{0, 0, 0};
  double lower_lhs = 0.0, lower_rhs = 0.0, lower_tol = 0.0;
  double upper_lhs = 0.0, upper_rhs = 0.0, upper_tol = 0.0;
  bool pass = false;
};

struct BeginningVerdict {
  bool pass = false;
  double worst_violation = 0.0;  // ordering chain, absolute
  std::string where;
  std::vector<InequalityPoint> points;  // near-Maxwellian mode only
};

BeginningVerdict beginning_condition_check(const VacuumBarrier& b,
                                           const Field& f0_lab,
                                           const CollisionQuadrature& q,
                                           const BeginningOptions& opt);
BeginningVerdict beginning_condition_check(const MaxwellianBarrier& b,
                                           const Field& f0_sharp,
                                           const CollisionQuadrature& q,
                                           const BeginningOptions& opt);

}  // namespace kb
