#pragma once

#include <memory>
#include <vector>

#include "kb/kernel.hpp"
#include "kb/phase.hpp"

namespace kb {

struct PostCollision {
  Vec v;
  Vec v_star;
};

/// 'v = v - (u.sigma) sigma, 'v* = v* + (u.sigma) sigma with u = v - v*.
/// Momentum and energy are conserved identically by this parametrization.
PostCollision post_collision(const Vec& v, const Vec& v_star, const Vec& sigma,
                             int n);

/// | |x+tau(v-'v)|^2 + |x+tau(v-'v*)|^2 - |x|^2 - |x+tau u|^2 |.
double trajectory_identity_residual(const Vec& x, const Vec& v,
                                    const Vec& v_star, const Vec& sigma,
                                    double tau, int n);

/// Precomputed quadrature for the collision integrals on a fixed grid.
///
/// The kernel factor K(|u|) hv^n is tabulated on the velocity difference
/// lattice, and for every (difference, angular node) pair the interpolation
/// stencils of 'v and 'v* are stored as integer shifts plus corner weights:
/// 'v - v_i = -(u.sigma) sigma depends on (i,j) only through v_i - v_j, so
/// one table row serves every cell pair with the same difference. The gain
/// loop then reduces to table-driven multilinear gathers.
class CollisionQuadrature {
 public:
  CollisionQuadrature(CollisionKernel kernel,
                      std::shared_ptr<const PhaseGrid> grid, int Nsigma);

  const CollisionKernel& kernel() const { return kernel_; }
  const PhaseGrid& grid() const { return *grid_; }
  std::shared_ptr<const PhaseGrid> grid_ptr() const { return grid_; }

  int requested_sigma() const { return n_sigma_req_; }
  std::size_t sigma_nodes() const { return sigma_.size(); }
  const std::vector<Vec>& sigma() const { return sigma_; }
  const std::vector<double>& sigma_weight() const { return sigma_w_; }

  /// Cell-averaged substitute for |u|^{-lambda} on the singular cell:
  /// the exact mean over the ball of volume hv^n, (n/(n-lambda)) r0^{-lambda}.
  double singular_cap() const { return cap_; }

  /// K(r): the cap below one velocity cell, r^{-lambda} elsewhere.
  double kernel_factor(double r) const;

  /// Gain slice for one spatial cell: out[i] += sum_{j,sigma} f('v) g('v*)
  /// K(|u|) b(uhat.sigma) w_sigma hv^n. `symmetric` enables the f == g
  /// fast path that walks unordered pairs once.
  void gain_slice(const double* f, const double* g, double* out,
                  bool symmetric) const;

  /// R(g) on one spatial slice: ||b|| sum_j g(v_j) K(|v_i - v_j|) hv^n.
  void loss_slice(const double* g, double* out) const;

 private:
  // Interpolation stencils of 'v (relative to v_i) and 'v* (relative to
  // v_j) for one (velocity difference, angular node) pair, with the kernel
  // and angular weights folded into the coefficients.
  struct PairStencil {
    double w1[8];
    double w2[8];
    double cplus;   // K(|u|) hv^n b(+uhat.sigma) w_sigma
    double cminus;  // K(|u|) hv^n b(-uhat.sigma) w_sigma
    short o1[3];
    short o2[3];
  };

  void build_tables();
  std::size_t du_index(const int di[3]) const;

  CollisionKernel kernel_;
  std::shared_ptr<const PhaseGrid> grid_;
  int n_sigma_req_;
  double cap_;

  std::vector<Vec> sigma_;
  std::vector<double> sigma_w_;

  std::vector<double> kfac_;          // K(|du|) hv^n on the difference lattice
  std::vector<PairStencil> stencils_; // per (du, sigma), sigma contiguous
  std::vector<int> vcoord_;           // per flat v-cell: n coordinates
  int side_;                          // 2 Nv - 1
};

/// Full-field operators; parallel over spatial cells.
Field loss_rate(const Field& g, const CollisionQuadrature& q,
                unsigned workers = 1);
Field gain(const Field& f, const Field& g, const CollisionQuadrature& q,
           unsigned workers = 1);
Field apply_Q(const Field& f, const Field& g, const CollisionQuadrature& q,
              unsigned workers = 1);

/// Point evaluations at arbitrary phase coordinates (multilinear in x and
/// v); used by the inequality checks that sample off-grid trajectories.
double gain_at(const Field& f_lab, const Field& g_lab,
               const CollisionQuadrature& q, const Vec& x, const Vec& v);
double loss_rate_at(const Field& g_lab, const CollisionQuadrature& q,
                    const Vec& x, const Vec& v);

}  // namespace kb
