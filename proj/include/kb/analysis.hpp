#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kb/solver.hpp"

namespace kb {

/// Forward difference (f(.+h e) - f)/h along a coordinate axis of either
/// variable; h is an integer number of cells so shifted reads land on
/// nodes, with zero extension past the box.
struct DifferenceOperator {
  enum class Var { Position, Velocity };
  Var var = Var::Position;
  int axis = 0;
  int cells = 1;

  double h(const PhaseGrid& g) const {
    return cells * (var == Var::Position ? g.hx : g.hv);
  }
  void validate(const PhaseGrid& g) const;
};

Field finite_difference(const Field& f, const DifferenceOperator& d);

struct CheckVerdict {
  std::string name;
  bool pass = false;
  bool skipped = false;
  double worst_ratio = 0.0;
  std::string location;
  std::string notes;
};

struct RegularityTrace {
  std::vector<double> t;         // lab times
  std::vector<double> value;     // measured norm
  std::vector<double> envelope;  // admissible bound
  double fitted_K = 0.0;
  double p = 2.0;
  double gamma = 0.0;
};

/// ||D_{h,x} f||_{Lp}(t) against ||D f0||_{Lp} exp(K/(n-lambda-1)), with K
/// fitted on the early quarter of the run from the measured growth rate
/// scaled by the (1+t)^{-(n-lambda)} collision-strength profile. The
/// position difference commutes with the trajectory transform, so norms
/// are taken on the stored trajectory slices directly.
std::pair<RegularityTrace, CheckVerdict> gradient_gronwall_check(
    const KSRun& run, double p, int h_cells = 1);

/// ||D_{h,v} f||_{Lp}(t) against C (||D_v f0|| + t ||D_x f0||) with the
/// same fitted constant C = exp(K/(n-lambda-1)).
std::pair<RegularityTrace, CheckVerdict> velocity_gradient_check(
    const KSRun& run, double p, int h_cells = 1);

/// sup_x ||f(t,x,.)||_{L^gamma_v} with gamma = n/(n-lambda) against the
/// closed-form traveling-envelope bound; also reports the fitted decay
/// constant max_t value (1+t)^{n-lambda}.
std::pair<RegularityTrace, CheckVerdict> lgamma_decay_check(const KSRun& run);

/// Near-vacuum weighted gradient bound: requires the run certificate
/// ||f0|| <= 3/(16 k) in its own (alpha, beta) norm and then checks
/// sup_t ||(Df)#(t)||_{alpha/2, beta} <= 2 ||D f0||_{alpha/2, beta}/(2-sqrt(2)).
std::pair<RegularityTrace, CheckVerdict> weighted_gradient_check(
    const KSRun& run, int h_cells = 1);

/// Weak L^{n/lambda} norm of |u|^{-lambda}: closed form
/// |S^{n-1}| / ((n-lambda) V_n^{1-lambda/n}), and a numerical sup over
/// centered balls (valid for radial nonincreasing integrands).
double potential_weak_norm(int n, double lambda);
double potential_weak_norm_numeric(int n, double lambda, int n_radii = 64,
                                   double rho_max = 8.0);

/// Splitting |u|^{-lambda} = Phi1 + Phi2 with Phi1 = (r^{-lambda}-1) on
/// the unit ball (L^s for s < n/lambda) and Phi2 bounded by one.
struct PotentialSplit {
  int n = 2;
  double lambda = 0.0;
  double s = 1.0;
  double phi1_ls_norm = 0.0;
  double phi2_sup = 1.0;

  double phi1(double r) const;
  double phi2(double r) const;
};
PotentialSplit potential_split(const CollisionKernel& kernel, double s);

/// ||Q+(f,g)||_{Lr_v} and ||Q-(f,g)||_{Lr_v} at one spatial slice, divided
/// by ||f||_{Lp_v} ||g||_{Lq_v} times the weak potential norm. Exactly
/// scale-invariant in (f, g).
struct QSliceRatios {
  double gain = 0.0;
  double loss = 0.0;
};
QSliceRatios q_slice_ratios(const Field& f, const Field& g,
                            const CollisionQuadrature& quad, double p,
                            double q, double r, std::size_t ix);

/// Collision operator Lr-vs-Lp,Lq ratios on random velocity slices, with a
/// one-step grid refinement stability monitor.
struct QEstimateReport {
  double p = 2.0, q = 2.0, r = 2.0;
  double weak_norm = 0.0;
  double max_ratio_gain = 0.0, max_ratio_loss = 0.0;
  double max_ratio_gain_fine = 0.0, max_ratio_loss_fine = 0.0;
  bool pass = false;
};
QEstimateReport q_estimate_check(double p, double q, double r,
                                 const CollisionKernel& kernel, int Nv,
                                 int Nsigma, double Lv, int n_pairs = 10,
                                 std::uint64_t seed = 97);

/// ||f-g||_{Lp}(t)/||f0-g0||_{Lp} for p in {1,2,inf} plus the weighted
/// trajectory-frame ratio, with the no-growth monitor
/// max(second half) <= 1.1 max(first half) per family.
struct StabilityTrace {
  std::vector<double> t;
  std::vector<double> r1, r2, rinf, rweighted;
  bool zero_trace = false;
  bool pass = false;
  std::string notes;
};
StabilityTrace stability_compare(const KSRun& run_f, const KSRun& run_g);

}  // namespace kb
