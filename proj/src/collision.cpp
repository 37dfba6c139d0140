#include "kb/collision.hpp"

#include <cmath>
#include <numbers>

#include "kb/parallel.hpp"

namespace kb {

PostCollision post_collision(const Vec& v, const Vec& v_star, const Vec& sigma,
                             int n) {
  if (n != 2 && n != 3)
    throw std::domain_error("post_collision: dimension must be 2 or 3");
  const double s2 = norm2(sigma);
  if (std::abs(s2 - 1.0) > 1e-9)
    throw std::domain_error("post_collision: sigma must be a unit vector");
  const Vec u = v - v_star;
  const double us = dot(u, sigma);
  return {v - us * sigma, v_star + us * sigma};
}

double trajectory_identity_residual(const Vec& x, const Vec& v,
                                    const Vec& v_star, const Vec& sigma,
                                    double tau, int n) {
  const auto pc = post_collision(v, v_star, sigma, n);
  const Vec u = v - v_star;
  const double lhs = norm2(x + tau * (v - pc.v)) +
                     norm2(x + tau * (v - pc.v_star));
  const double rhs = norm2(x) + norm2(x + tau * u);
  return std::abs(lhs - rhs);
}

CollisionQuadrature::CollisionQuadrature(CollisionKernel kernel,
                                         std::shared_ptr<const PhaseGrid> grid,
                                         int Nsigma)
    : kernel_(std::move(kernel)), grid_(std::move(grid)),
      n_sigma_req_(Nsigma) {
  if (kernel_.dim() != grid_->n)
    throw ContractError("CollisionQuadrature: kernel/grid dimension mismatch");
  if (Nsigma < 8)
    throw std::domain_error("CollisionQuadrature: need Nsigma >= 8");
  const int n = grid_->n;
  const double lambda = kernel_.lambda();
  // Ball of volume hv^n: radius r0 = hv / V_n^{1/n}.
  const double r0 = grid_->hv / std::pow(ball_volume(n), 1.0 / n);
  cap_ = (n / (n - lambda)) * std::pow(r0, -lambda);

  if (n == 2) {
    sigma_.reserve(Nsigma);
    const double w = 2.0 * std::numbers::pi / Nsigma;
    for (int m = 0; m < Nsigma; ++m) {
      const double th = (m + 0.5) * w;
      sigma_.push_back(vec2(std::cos(th), std::sin(th)));
      sigma_w_.push_back(w);
    }
  } else {
    // Tensor rule: Gauss-Legendre in cos(theta), uniform midpoints in
    // azimuth, sized so the node count is at least Nsigma.
    const int ntheta = std::max(
        2, static_cast<int>(std::ceil(std::sqrt(0.5 * Nsigma))));
    const int nphi = 2 * ntheta;
    std::vector<double> gx, gw;
    gauss_legendre(ntheta, gx, gw);
    const double wphi = 2.0 * std::numbers::pi / nphi;
    for (int a = 0; a < ntheta; ++a) {
      const double c = gx[a];
      const double s = std::sqrt(std::max(0.0, 1.0 - c * c));
      for (int p = 0; p < nphi; ++p) {
        const double phi = (p + 0.5) * wphi;
        sigma_.push_back(vec3(s * std::cos(phi), s * std::sin(phi), c));
        sigma_w_.push_back(gw[a] * wphi);
      }
    }
  }
  build_tables();
}

double CollisionQuadrature::kernel_factor(double r) const {
  if (r < grid_->hv) return cap_;
  return std::pow(r, -kernel_.lambda());
}

std::size_t CollisionQuadrature::du_index(const int di[3]) const {
  const int n = grid_->n;
  const int Nv = grid_->Nv;
  std::size_t flat = 0;
  for (int d = n - 1; d >= 0; --d)
    flat = flat * static_cast<std::size_t>(side_) +
           static_cast<std::size_t>(di[d] + (Nv - 1));
  return flat;
}

void CollisionQuadrature::build_tables() {
  const auto& g = *grid_;
  const int n = g.n;
  const int Nv = g.Nv;
  side_ = 2 * Nv - 1;
  std::size_t lattice = 1;
  for (int d = 0; d < n; ++d) lattice *= static_cast<std::size_t>(side_);
  const std::size_t ns = sigma_.size();
  const double cellv = std::pow(g.hv, n);
  const auto& b = kernel_.angular();

  kfac_.assign(lattice, 0.0);
  stencils_.assign(lattice * ns, PairStencil{});

  for (std::size_t flat = 0; flat < lattice; ++flat) {
    std::size_t rem = flat;
    Vec du{0.0, 0.0, 0.0};
    int dc[3] = {0, 0, 0};
    for (int d = 0; d < n; ++d) {
      dc[d] = static_cast<int>(rem % static_cast<std::size_t>(side_)) -
              (Nv - 1);
      rem /= static_cast<std::size_t>(side_);
      du[d] = dc[d] * g.hv;
    }
    const double r = norm(du);
    kfac_[flat] = kernel_factor(r) * cellv;
    const Vec uhat = r > 0.0 ? (1.0 / r) * du : vec3(1.0, 0.0, 0.0);
    for (std::size_t s = 0; s < ns; ++s) {
      PairStencil& st = stencils_[flat * ns + s];
      const Vec& sg = sigma_[s];
      const double us = dot(du, sg);
      // 'v - v_i = -(u.sigma) sigma; 'v* - v_j = +(u.sigma) sigma.
      double frac1[3], frac2[3];
      for (int d = 0; d < n; ++d) {
        const double q1 = -us * sg[d] / g.hv;
        const double q2 = +us * sg[d] / g.hv;
        const double f1 = std::floor(q1);
        const double f2 = std::floor(q2);
        st.o1[d] = static_cast<short>(f1);
        st.o2[d] = static_cast<short>(f2);
        frac1[d] = q1 - f1;
        frac2[d] = q2 - f2;
      }
      const int corners = 1 << n;
      for (int c = 0; c < corners; ++c) {
        double w1 = 1.0, w2 = 1.0;
        for (int d = 0; d < n; ++d) {
          const int bit = (c >> d) & 1;
          w1 *= bit ? frac1[d] : 1.0 - frac1[d];
          w2 *= bit ? frac2[d] : 1.0 - frac2[d];
        }
        st.w1[c] = w1;
        st.w2[c] = w2;
      }
      const double coeff = kfac_[flat] * sigma_w_[s];
      const double uh_s = dot(uhat, sg);
      st.cplus = coeff * b(uh_s);
      st.cminus = coeff * b(-uh_s);
    }
  }

  vcoord_.assign(g.v_cells() * 3, 0);
  for (std::size_t iv = 0; iv < g.v_cells(); ++iv) {
    int c[3];
    g.v_coords(iv, c);
    for (int d = 0; d < 3; ++d) vcoord_[iv * 3 + d] = c[d];
  }
}

namespace {

// Bilinear gather on an Nv x Nv slice with zero extension.
inline double gather2d(const double* f, int bx, int by, const double* w,
                       int Nv) {
  if (static_cast<unsigned>(bx) < static_cast<unsigned>(Nv - 1) &&
      static_cast<unsigned>(by) < static_cast<unsigned>(Nv - 1)) {
    const double* p = f + static_cast<std::size_t>(by) * Nv + bx;
    return w[0] * p[0] + w[1] * p[1] + w[2] * p[Nv] + w[3] * p[Nv + 1];
  }
  double acc = 0.0;
  for (int c = 0; c < 4; ++c) {
    const int cx = bx + (c & 1);
    const int cy = by + (c >> 1);
    if (static_cast<unsigned>(cx) < static_cast<unsigned>(Nv) &&
        static_cast<unsigned>(cy) < static_cast<unsigned>(Nv))
      acc += w[c] * f[static_cast<std::size_t>(cy) * Nv + cx];
  }
  return acc;
}

inline double gather3d(const double* f, int bx, int by, int bz,
                       const double* w, int Nv) {
  const std::size_t nn = static_cast<std::size_t>(Nv) * Nv;
  if (static_cast<unsigned>(bx) < static_cast<unsigned>(Nv - 1) &&
      static_cast<unsigned>(by) < static_cast<unsigned>(Nv - 1) &&
      static_cast<unsigned>(bz) < static_cast<unsigned>(Nv - 1)) {
    const double* p = f + static_cast<std::size_t>(bz) * nn +
                      static_cast<std::size_t>(by) * Nv + bx;
    return w[0] * p[0] + w[1] * p[1] + w[2] * p[Nv] + w[3] * p[Nv + 1] +
           w[4] * p[nn] + w[5] * p[nn + 1] + w[6] * p[nn + Nv] +
           w[7] * p[nn + Nv + 1];
  }
  double acc = 0.0;
  for (int c = 0; c < 8; ++c) {
    const int cx = bx + (c & 1);
    const int cy = by + ((c >> 1) & 1);
    const int cz = bz + (c >> 2);
    if (static_cast<unsigned>(cx) < static_cast<unsigned>(Nv) &&
        static_cast<unsigned>(cy) < static_cast<unsigned>(Nv) &&
        static_cast<unsigned>(cz) < static_cast<unsigned>(Nv))
      acc += w[c] * f[static_cast<std::size_t>(cz) * nn +
                      static_cast<std::size_t>(cy) * Nv + cx];
  }
  return acc;
}

}  // namespace

void CollisionQuadrature::gain_slice(const double* f, const double* g,
                                     double* out, bool symmetric) const {
  const auto& gr = *grid_;
  const int n = gr.n;
  const int Nv = gr.Nv;
  const std::size_t vc = gr.v_cells();
  const std::size_t ns = sigma_.size();

  if (n == 2) {
    for (std::size_t i = 0; i < vc; ++i) {
      const int ixv = vcoord_[i * 3 + 0];
      const int iyv = vcoord_[i * 3 + 1];
      double acc = out[i];
      const std::size_t j0 = symmetric ? i : 0;
      for (std::size_t j = j0; j < vc; ++j) {
        const int dxc = ixv - vcoord_[j * 3 + 0];
        const int dyc = iyv - vcoord_[j * 3 + 1];
        const std::size_t du =
            static_cast<std::size_t>(dyc + (Nv - 1)) * side_ +
            static_cast<std::size_t>(dxc + (Nv - 1));
        const PairStencil* ps = stencils_.data() + du * ns;
        const int jx = vcoord_[j * 3 + 0];
        const int jy = vcoord_[j * 3 + 1];
        double pi = 0.0, pj = 0.0;
        for (std::size_t s = 0; s < ns; ++s) {
          const PairStencil& e = ps[s];
          const double a =
              gather2d(f, ixv + e.o1[0], iyv + e.o1[1], e.w1, Nv);
          const double bval =
              gather2d(g, jx + e.o2[0], jy + e.o2[1], e.w2, Nv);
          const double prod = a * bval;
          pi += prod * e.cplus;
          pj += prod * e.cminus;
        }
        acc += pi;
        if (symmetric && j != i) out[j] += pj;
      }
      out[i] = acc;
    }
    return;
  }

  for (std::size_t i = 0; i < vc; ++i) {
    const int ix = vcoord_[i * 3 + 0];
    const int iy = vcoord_[i * 3 + 1];
    const int iz = vcoord_[i * 3 + 2];
    double acc = out[i];
    const std::size_t j0 = symmetric ? i : 0;
    for (std::size_t j = j0; j < vc; ++j) {
      const int dc[3] = {ix - vcoord_[j * 3 + 0], iy - vcoord_[j * 3 + 1],
                         iz - vcoord_[j * 3 + 2]};
      const std::size_t du = du_index(dc);
      const PairStencil* ps = stencils_.data() + du * ns;
      const int jx = vcoord_[j * 3 + 0];
      const int jy = vcoord_[j * 3 + 1];
      const int jz = vcoord_[j * 3 + 2];
      double pi = 0.0, pj = 0.0;
      for (std::size_t s = 0; s < ns; ++s) {
        const PairStencil& e = ps[s];
        const double a = gather3d(f, ix + e.o1[0], iy + e.o1[1], iz + e.o1[2],
                                  e.w1, Nv);
        const double bval = gather3d(g, jx + e.o2[0], jy + e.o2[1],
                                     jz + e.o2[2], e.w2, Nv);
        const double prod = a * bval;
        pi += prod * e.cplus;
        pj += prod * e.cminus;
      }
      acc += pi;
      if (symmetric && j != i) out[j] += pj;
    }
    out[i] = acc;
  }
}

void CollisionQuadrature::loss_slice(const double* g, double* out) const {
  const auto& gr = *grid_;
  const std::size_t vc = gr.v_cells();
  const double bnorm = kernel_.angular_norm();
  for (std::size_t i = 0; i < vc; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < vc; ++j) {
      int dc[3] = {0, 0, 0};
      for (int d = 0; d < gr.n; ++d)
        dc[d] = vcoord_[i * 3 + d] - vcoord_[j * 3 + d];
      acc += g[j] * kfac_[du_index(dc)];
    }
    out[i] = bnorm * acc;
  }
}

namespace {

void check_pair(const Field& f, const Field& g, const char* who) {
  if (!f.grid().same_as(g.grid()))
    throw ContractError(std::string(who) + ": fields on different grids");
  if (f.frame() != g.frame())
    throw ContractError(std::string(who) + ": frame mismatch");
  if (f.t() != g.t())
    throw ContractError(std::string(who) + ": time mismatch");
}

}  // namespace

Field loss_rate(const Field& g, const CollisionQuadrature& q,
                unsigned workers) {
  if (!g.grid().same_as(q.grid()))
    throw ContractError("loss_rate: field grid differs from quadrature grid");
  Field out(g.grid_ptr(), g.t(), g.frame());
  const std::size_t nx = g.grid().x_cells();
  parallel_for(nx, workers, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t ix = lo; ix < hi; ++ix)
      q.loss_slice(g.slice(ix), out.slice(ix));
  });
  return out;
}

Field gain(const Field& f, const Field& g, const CollisionQuadrature& q,
           unsigned workers) {
  check_pair(f, g, "gain");
  if (!f.grid().same_as(q.grid()))
    throw ContractError("gain: field grid differs from quadrature grid");
  const bool symmetric = &f == &g || f.values().data() == g.values().data();
  Field out(f.grid_ptr(), f.t(), f.frame());
  const std::size_t nx = f.grid().x_cells();
  parallel_for(nx, workers, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t ix = lo; ix < hi; ++ix)
      q.gain_slice(f.slice(ix), g.slice(ix), out.slice(ix), symmetric);
  });
  return out;
}

Field apply_Q(const Field& f, const Field& g, const CollisionQuadrature& q,
              unsigned workers) {
  check_pair(f, g, "apply_Q");
  Field gp = gain(f, g, q, workers);
  Field loss = loss_rate(g, q, workers);
  const std::size_t total = gp.values().size();
  for (std::size_t c = 0; c < total; ++c)
    gp.values()[c] -= f.values()[c] * loss.values()[c];
  return gp;
}

double gain_at(const Field& f_lab, const Field& g_lab,
               const CollisionQuadrature& q, const Vec& x, const Vec& v) {
  check_pair(f_lab, g_lab, "gain_at");
  const auto& gr = q.grid();
  const double cellv = std::pow(gr.hv, gr.n);
  const auto& b = q.kernel().angular();
  double acc = 0.0;
  for (std::size_t j = 0; j < gr.v_cells(); ++j) {
    const Vec vj = gr.v_center(j);
    const Vec u = v - vj;
    const double r = norm(u);
    const double kf = q.kernel_factor(r) * cellv;
    const Vec uhat = r > 0.0 ? (1.0 / r) * u : vec3(1.0, 0.0, 0.0);
    for (std::size_t s = 0; s < q.sigma_nodes(); ++s) {
      const Vec& sg = q.sigma()[s];
      const double us = dot(u, sg);
      const Vec vp = v - us * sg;
      const Vec vsp = vj + us * sg;
      const double bw = b(dot(uhat, sg)) * q.sigma_weight()[s];
      if (bw == 0.0) continue;
      acc += interp_xv(f_lab, x, vp) * interp_xv(g_lab, x, vsp) * kf * bw;
    }
  }
  return acc;
}

double loss_rate_at(const Field& g_lab, const CollisionQuadrature& q,
                    const Vec& x, const Vec& v) {
  const auto& gr = q.grid();
  const double cellv = std::pow(gr.hv, gr.n);
  double acc = 0.0;
  for (std::size_t j = 0; j < gr.v_cells(); ++j) {
    const Vec vj = gr.v_center(j);
    const double r = norm(v - vj);
    acc += interp_x(g_lab, x, j) * q.kernel_factor(r) * cellv;
  }
  return q.kernel().angular_norm() * acc;
}

}  // namespace kb
