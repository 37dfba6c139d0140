#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "kb/barriers.hpp"
#include "kb/collision.hpp"

namespace kb {

struct SolverOptions {
  double T = 5.0;
  int Nt = 64;
  double tol_rel = 1e-5;        // gap target relative to the initial gap
  int max_iter = 40;
  unsigned workers = 1;
  double order_tol_rel = 1e-10; // ordering slack between iterates, x scale
  // The barrier <-> first iterate comparisons are quadrature-limited: cell
  // interpolation overestimates Maxwellian tails, so the first link is
  // checked at this (absolute, x scale) tolerance and later iterations
  // must decay any carried violation geometrically down to order_tol_rel.
  double first_link_tol_rel = 1e-3;
  // Weighted norms divide by the envelope, which amplifies tail quadrature
  // noise beyond meaning; the gap is monitored on cells with
  // alpha|x|^2 + beta|v|^2 <= gap_arg_cap.
  double gap_arg_cap = 5.0;
  double auto_refine_tol = 0.0; // > 0: double Nt once if the mild residual
                                // exceeds this absolute threshold
};

struct IterationRecord {
  int n = 0;
  double gap = 0.0;
  double ratio = 0.0;            // gap_n / gap_{n-1}
  double worst_violation = 0.0;  // ordering chain, absolute
  bool ordered = false;
};

struct IterationReport {
  std::vector<IterationRecord> iterations;
  bool converged = false;
  bool monotone_ok = true;
  bool sandwich_ok = false;      // final midpoint inside (l0, u0)
  double initial_gap = 0.0;
  double final_gap = 0.0;
  double order_scale = 0.0;      // absolute scale the tolerances refer to
  std::string notes;
};

/// One sweep of the alternating linear mild problems:
///   l': loss rate from u_prev, gain source from l_prev,
///   u': loss rate from l_prev, gain source from u_prev,
/// integrated per cell with the exact integrating factor and composite
/// trapezoid increments (rescaled so no large exponential ever forms).
/// All series are trajectory-frame on the same uniform node set, and both
/// outputs start from f0_sharp at the first node.
std::pair<FieldSeries, FieldSeries> linear_step(const FieldSeries& l_prev,
                                                const FieldSeries& u_prev,
                                                const Field& f0_sharp,
                                                const CollisionQuadrature& q,
                                                unsigned workers = 1);

/// Converged run plus everything the verification checks consume.
struct KSRun {
  explicit KSRun(Field f0) : f0_sharp(std::move(f0)) {}

  std::shared_ptr<const PhaseGrid> grid;
  std::shared_ptr<const CollisionQuadrature> quad;
  KernelMode regime = KernelMode::NearVacuum;

  std::optional<VacuumBarrier> vacuum;
  std::optional<MaxwellianBarrier> maxwellian;

  double alpha_norm = 1.0, beta_norm = 1.0;  // weights of the gap norm
  double t0 = 0.0;  // internal clock origin (1 for near-Maxwellian runs)
  double T = 5.0;
  int Nt = 64;

  Field f0_sharp;      // initial datum on the internal clock
  FieldSeries f;       // midpoint series, trajectory frame, internal clock
  double f0_norm = 0.0;
  IterationReport report;

  double dt() const { return T / Nt; }
  double lab_time(std::size_t k) const { return f.t(k) - t0; }
};

/// Monotone iteration between the small-data barriers l0 = 0 and
/// u0 = C M_{alpha,beta}; f0_lab is the t = 0 datum.
KSRun ks_solve(const Field& f0_lab, const VacuumBarrier& barrier,
               const CollisionQuadrature& q, const SolverOptions& opt);

/// Same between the near-Maxwellian profiles on the internal clock
/// t in [1, 1+T]; f0_sharp is the trajectory-frame datum at t = 1,
/// i.e. f0(x+v, v).
KSRun ks_solve(const Field& f0_sharp, const MaxwellianBarrier& barrier,
               const CollisionQuadrature& q, const SolverOptions& opt);

/// sup-norm residual of d f#/dt = Q#(f,f) at interior nodes, with the time
/// derivative from central differences.
std::vector<double> mild_residual_trace(const KSRun& run,
                                        unsigned workers = 1);

}  // namespace kb
