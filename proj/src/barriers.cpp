#include "kb/barriers.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "kb/parallel.hpp"

namespace kb {

double k_alpha_beta(double alpha, double beta, const CollisionKernel& k) {
  if (!(alpha > 0.0))
    throw std::domain_error("k_alpha_beta: alpha must be > 0");
  if (!(beta > 0.0))
    throw std::domain_error(
        "k_alpha_beta: unavailable for beta = 0 (infinite-mass envelopes "
        "have no small-data constant; use the near-Maxwellian barriers)");
  const int n = k.dim();
  const double lambda = k.lambda();
  const double cn = std::pow(std::numbers::pi, 0.5 * n);
  return std::sqrt(std::numbers::pi) / std::sqrt(alpha) * k.angular_norm() *
         (sphere_area(n) / (n - lambda - 1.0) + cn * std::pow(beta, -0.5 * n));
}

double vacuum_fixed_point(double f0_norm, double k_ab) {
  if (!(f0_norm >= 0.0))
    throw std::domain_error("vacuum_fixed_point: f0_norm must be >= 0");
  if (!(k_ab > 0.0))
    throw std::domain_error("vacuum_fixed_point: k must be > 0");
  double disc = 1.0 - 4.0 * k_ab * f0_norm;
  if (disc < 0.0 && disc > -1e-12) disc = 0.0;  // threshold datum
  if (disc < 0.0)
    throw SmallnessError(
        "vacuum_fixed_point: smallness violated, |f0| = " +
        std::to_string(f0_norm) + " exceeds the threshold 1/(4k) = " +
        std::to_string(0.25 / k_ab));
  if (f0_norm == 0.0) return 0.0;
  return 2.0 * f0_norm / (1.0 + std::sqrt(disc));
}

VacuumBarrier VacuumBarrier::build(double alpha, double beta, double f0_norm,
                                   const CollisionKernel& kernel) {
  VacuumBarrier b;
  b.alpha = alpha;
  b.beta = beta;
  b.f0_norm = f0_norm;
  b.k_ab = k_alpha_beta(alpha, beta, kernel);
  b.C = vacuum_fixed_point(f0_norm, b.k_ab);
  b.Cn = std::pow(std::numbers::pi, 0.5 * kernel.dim());
  return b;
}

double phi_eval(double alpha, double beta, double t, const Vec& x,
                const Vec& v, const CollisionKernel& k, int Nu) {
  if (!(t >= 1.0)) throw std::domain_error("phi_eval: requires t >= 1");
  if (!(alpha > 0.0) || !(beta >= 0.0))
    throw std::domain_error("phi_eval: need alpha > 0, beta >= 0");
  const int n = k.dim();
  const double lambda = k.lambda();
  const double radius = std::sqrt(std::log(1e12) / alpha);

  double h;
  if (Nu > 0) {
    h = 2.0 * radius / Nu;
  } else {
    double scale = 1.0 / std::sqrt(alpha);
    if (beta > 0.0) scale = std::min(scale, t / std::sqrt(beta));
    h = scale / 6.0;
    const double cap_pts = n == 2 ? 160.0 : 72.0;
    h = std::max(h, 2.0 * radius / cap_pts);
  }
  // Lattice with u = 0 on a cell center, covering the position Gaussian.
  int lo[3] = {0, 0, 0}, hi[3] = {0, 0, 0};
  for (int d = 0; d < n; ++d) {
    lo[d] = static_cast<int>(std::floor((-x[d] - radius) / h));
    hi[d] = static_cast<int>(std::ceil((-x[d] + radius) / h));
  }
  const double r0 = h / std::pow(ball_volume(n), 1.0 / n);
  const double cap = (n / (n - lambda)) * std::pow(r0, -lambda);
  const double cell = std::pow(h, n);
  const double inv_t = 1.0 / t;

  double sum = 0.0;
  int iz_lo = n == 3 ? lo[2] : 0, iz_hi = n == 3 ? hi[2] : 0;
  for (int iz = iz_lo; iz <= iz_hi; ++iz) {
    for (int iy = lo[1]; iy <= hi[1]; ++iy) {
      for (int ix = lo[0]; ix <= hi[0]; ++ix) {
        Vec u{ix * h, iy * h, n == 3 ? iz * h : 0.0};
        const double a1 = alpha * norm2(x + u);
        if (a1 > 27.7) continue;  // exp < 1e-12
        const double r = norm(u);
        const double kf = r < h ? cap : std::pow(r, -lambda);
        double a2 = 0.0;
        if (beta > 0.0) a2 = beta * norm2(v - inv_t * u);
        sum += std::exp(-a1 - a2) * kf;
      }
    }
  }
  return k.angular_norm() * sum * cell;
}

double maxwellian_distance(const MaxwellianSpec& M1, const MaxwellianSpec& M2) {
  if (M1.shift != M2.shift)
    throw std::domain_error(
        "maxwellian_distance: envelopes live in different shift frames");
  return std::abs(M2.C - M1.C) + std::abs(M2.alpha - M1.alpha) +
         std::abs(M2.beta - M1.beta);
}

namespace {

struct PhiProbe {
  double t, r, v1, v2;
};

double phi_at(const MaxwellianSpec& m, const CollisionKernel& k,
              const PhiProbe& p, int Nu) {
  const Vec x = vec3(p.r, 0.0, 0.0);
  const Vec v = vec3(p.v1, p.v2, 0.0);
  return phi_eval(m.alpha, m.beta, p.t, x, v, k, Nu);
}

}  // namespace

PhiSups phi_sup_norms(const MaxwellianSpec& M1, const MaxwellianSpec& M2,
                      const CollisionKernel& k, const PhiSupOptions& opt) {
  // phi is invariant under joint rotation of (x, v): probe x along the
  // first axis and v in the spanned half-plane.
  const double amin = std::min(M1.alpha, M2.alpha);
  const double bmin = std::min(M1.beta, M2.beta);
  const double xs = 3.0 / std::sqrt(amin);
  const double vs = bmin > 0.0 ? 3.0 / std::sqrt(bmin) : 0.0;

  std::vector<double> ts{1.0, 1.5, 2.0, 3.0, 5.0, 10.0, 30.0, 100.0, 1e3, 1e9};
  std::vector<double> rs, v1s, v2s;
  for (int i = 0; i < 6; ++i) rs.push_back(xs * i / 5.0);
  if (vs > 0.0) {
    for (int i = -3; i <= 3; ++i) v1s.push_back(vs * i / 3.0);
    for (int i = 0; i <= 2; ++i) v2s.push_back(vs * i / 2.0);
  } else {
    v1s = {0.0};
    v2s = {0.0};
  }

  struct Tracker {
    double best = -1.0;
    PhiProbe arg{1.0, 0.0, 0.0, 0.0};
    void offer(double val, const PhiProbe& p) {
      if (val > best) {
        best = val;
        arg = p;
      }
    }
  } t1, t2, tsum, tdiff;

  const auto scan = [&](const PhiProbe& p) {
    const double f1 = phi_at(M1, k, p, opt.Nu);
    const double f2 = phi_at(M2, k, p, opt.Nu);
    t1.offer(f1, p);
    t2.offer(f2, p);
    tsum.offer(f1 + f2, p);
    tdiff.offer(std::abs(f1 - f2), p);
  };

  for (double t : ts)
    for (double r : rs)
      for (double v1 : v1s)
        for (double v2 : v2s) scan({t, r, v1, v2});

  // One local refinement pass around each argmax at half lattice spacing.
  const double dr = rs.size() > 1 ? rs[1] - rs[0] : 0.0;
  const double dv1 = v1s.size() > 1 ? v1s[1] - v1s[0] : 0.0;
  const double dv2 = v2s.size() > 1 ? v2s[1] - v2s[0] : 0.0;
  for (Tracker* tr : {&t1, &t2, &tsum, &tdiff}) {
    const PhiProbe c = tr->arg;
    for (double ft : {0.7, 1.0, 1.4}) {
      const double t = std::max(1.0, c.t * ft);
      for (int ir = -1; ir <= 1; ++ir)
        for (int i1 = -1; i1 <= 1; ++i1)
          for (int i2 = -1; i2 <= 1; ++i2) {
            PhiProbe p{t, std::max(0.0, c.r + 0.5 * dr * ir),
                       c.v1 + 0.5 * dv1 * i1, std::max(0.0, c.v2 + 0.5 * dv2 * i2)};
            scan(p);
          }
    }
  }

  PhiSups out;
  out.phi1 = t1.best * opt.sup_margin;
  out.phi2 = t2.best * opt.sup_margin;
  out.sum = tsum.best * opt.sup_margin;
  out.diff = tdiff.best * opt.sup_margin;
  return out;
}

double barrier_k2(double C1_init, double C2_init, const PhiSups& sups) {
  if (!(C1_init > 0.0) || !(C2_init >= C1_init))
    throw std::domain_error("barrier_k2: need 0 < C1(1) <= C2(1)");
  if (!(sups.sum > sups.diff) || !(sups.diff >= 0.0))
    throw std::domain_error(
        "barrier_k2: degenerate envelope norms (||phi1+phi2|| must exceed "
        "||phi1-phi2||)");
  return (sups.sum - sups.diff) / (sups.sum + sups.diff) * C1_init * C2_init;
}

double boundedness_margin(double C2_init, double k, double P, double D,
                          double mu) {
  if (!(mu > 0.0)) throw std::domain_error("boundedness_margin: mu <= 0");
  const double kappa = k * (P + D) / mu;
  if (C2_init - k <= 0.0) return std::numeric_limits<double>::infinity();
  const double ratio = (C2_init + k) / (C2_init - k);
  return ratio * std::exp(-kappa);
}

SandwichVerdict sandwich_check(const Field& f0_lab, const MaxwellianSpec& M1,
                               const MaxwellianSpec& M2,
                               const MaxwellianSpec& M, double eps) {
  SandwichVerdict verdict;
  verdict.d1 = maxwellian_distance(M1, M);
  verdict.d2 = maxwellian_distance(M2, M);
  verdict.distance_ok = verdict.d1 < eps && verdict.d2 < eps;

  const auto& g = f0_lab.grid();
  double worst_lower = -std::numeric_limits<double>::infinity();
  double worst_upper = -std::numeric_limits<double>::infinity();
  for (std::size_t ix = 0; ix < g.x_cells(); ++ix) {
    const Vec y = g.x_center(ix);
    for (std::size_t iv = 0; iv < g.v_cells(); ++iv) {
      const Vec v = g.v_center(iv);
      const double f = f0_lab(ix, iv);
      const double lo = M1(y, v);
      const double hi = M2(y, v);
      if (lo - f > worst_lower) {
        worst_lower = lo - f;
        if (lo - f > 0.0) {
          verdict.worst_ix = ix;
          verdict.worst_iv = iv;
        }
      }
      if (f - hi > worst_upper) {
        worst_upper = f - hi;
        if (f - hi > 0.0) {
          verdict.worst_ix = ix;
          verdict.worst_iv = iv;
        }
      }
    }
  }
  verdict.worst_lower = worst_lower;
  verdict.worst_upper = worst_upper;
  verdict.pass = verdict.distance_ok && worst_lower <= 0.0 && worst_upper <= 0.0;
  return verdict;
}

double MaxwellianBarrier::c2(double t) const {
  if (!(t >= 1.0)) throw std::domain_error("c2 profile: requires t >= 1");
  // Equal barriers: both slopes vanish identically and the profiles are
  // the constants themselves.
  if (sups.diff == 0.0 && M1.C == M2.C) return M2.C;
  if (t >= critical_t)
    throw BlowupError(
        "barrier amplitude blows up before t = " + std::to_string(t) +
            " (critical time " + std::to_string(critical_t) + ")",
        critical_t);
  const double ratio0 = (M2.C - k) / (M2.C + k);
  const double y = std::exp(kappa * (1.0 - std::pow(t, -mu))) * ratio0;
  if (y >= 1.0)
    throw BlowupError("barrier amplitude blows up at t = " + std::to_string(t),
                      critical_t);
  return k * (1.0 + y) / (1.0 - y);
}

double MaxwellianBarrier::c1(double t) const {
  if (sups.diff == 0.0 && M1.C == M2.C) return M1.C;
  return M1.C * M2.C / c2(t);
}

MaxwellianBarrier MaxwellianBarrier::build(const MaxwellianSpec& M,
                                           const MaxwellianSpec& M1,
                                           const MaxwellianSpec& M2,
                                           double eps,
                                           const CollisionKernel& kernel,
                                           const PhiSupOptions& opt) {
  M.validate();
  M1.validate();
  M2.validate();
  if (M1.shift != M.shift || M2.shift != M.shift)
    throw std::domain_error("MaxwellianBarrier: shift frames must agree");
  if (!(maxwellian_distance(M1, M) < eps) ||
      !(maxwellian_distance(M2, M) < eps))
    throw std::domain_error(
        "MaxwellianBarrier: envelopes are not eps-close to the target");
  if (!(M2.alpha <= M.alpha && M.alpha <= M1.alpha))
    throw std::domain_error("MaxwellianBarrier: need alpha2 <= alpha <= alpha1");
  if (!(M2.beta <= M.beta && M.beta <= M1.beta))
    throw std::domain_error("MaxwellianBarrier: need beta2 <= beta <= beta1");
  if (!(M1.C <= M.C && M.C <= M2.C))
    throw std::domain_error("MaxwellianBarrier: need C1 <= C <= C2");
  const bool bracket =
      0.5 * M.C <= M1.C && M2.C <= 2.0 * M.C && 0.5 * M.alpha <= M2.alpha &&
      M1.alpha <= 2.0 * M.alpha && 0.5 * M.beta <= M2.beta &&
      M1.beta <= 2.0 * M.beta;
  if (!bracket)
    throw std::domain_error(
        "MaxwellianBarrier: envelopes break the factor-2 bracketing of the "
        "target parameters");

  MaxwellianBarrier b;
  b.M = M;
  b.M1 = M1;
  b.M2 = M2;
  b.eps = eps;
  b.sups = phi_sup_norms(M1, M2, kernel, opt);
  b.k2 = barrier_k2(M1.C, M2.C, b.sups);
  b.k = std::sqrt(b.k2);
  b.mu = kernel.dim() - kernel.lambda() - 1.0;
  b.t_exponent = kernel.dim() - kernel.lambda();
  b.kappa = b.k * (b.sups.sum + b.sups.diff) / b.mu;
  b.margin = boundedness_margin(M2.C, b.k, b.sups.sum, b.sups.diff, b.mu);
  if (b.margin <= 1.0 && std::isfinite(b.margin)) {
    const double q0 = (M2.C + b.k) / (M2.C - b.k);
    const double arg = 1.0 - std::log(q0) / b.kappa;
    b.critical_t = std::pow(arg, -1.0 / b.mu);
  }
  return b;
}

GainIntegralReport gain_time_integral_check(const Field& f_sharp,
                                            const Field& g_sharp,
                                            const CollisionQuadrature& q,
                                            double alpha, double beta,
                                            const GainIntegralOptions& opt) {
  if (f_sharp.frame() != Frame::Trajectory ||
      g_sharp.frame() != Frame::Trajectory)
    throw ContractError(
        "gain_time_integral_check: inputs must be trajectory-frame fields");
  const auto& grid = q.grid();
  const double fnorm = weighted_sup_norm(f_sharp, alpha, beta);
  const double gnorm = weighted_sup_norm(g_sharp, alpha, beta);
  const double kab = k_alpha_beta(alpha, beta, q.kernel());

  GainIntegralReport report;
  report.k_ab = kab;

  // Admissible sample cells: envelope argument below the resolvability cap.
  std::vector<std::pair<std::size_t, std::size_t>> pool;
  for (std::size_t ix = 0; ix < grid.x_cells(); ++ix) {
    const double ax = alpha * norm2(grid.x_center(ix));
    if (ax > opt.arg_cap) continue;
    for (std::size_t iv = 0; iv < grid.v_cells(); ++iv)
      if (ax + beta * norm2(grid.v_center(iv)) <= opt.arg_cap)
        pool.emplace_back(ix, iv);
  }
  if (pool.empty())
    throw std::domain_error(
        "gain_time_integral_check: no cells below the envelope cap");
  std::mt19937_64 rng(opt.seed);
  std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
  report.samples.resize(opt.n_samples);
  for (auto& s : report.samples) {
    const auto& cell = pool[pick(rng)];
    s.ix = cell.first;
    s.iv = cell.second;
  }

  const double dtau = opt.T / opt.Nt;
  std::vector<double> acc(report.samples.size(), 0.0);
  for (int kt = 0; kt <= opt.Nt; ++kt) {
    const double tau = kt * dtau;
    Field fs = f_sharp;
    fs.set_t(tau);
    Field gs = g_sharp;
    gs.set_t(tau);
    const Field flab = from_trajectory(fs);
    const Field glab = from_trajectory(gs);
    const double w = (kt == 0 || kt == opt.Nt) ? 0.5 * dtau : dtau;
    parallel_for(report.samples.size(), opt.workers,
                 [&](std::size_t lo, std::size_t hi) {
                   for (std::size_t s = lo; s < hi; ++s) {
                     const auto& smp = report.samples[s];
                     const Vec xc = grid.x_center(smp.ix);
                     const Vec vc = grid.v_center(smp.iv);
                     const Vec xt = xc + tau * vc;
                     const double val = gain_at(flab, glab, q, xt, vc);
                     acc[s] += w * std::abs(val);
                   }
                 });
  }

  double worst = 0.0;
  for (std::size_t s = 0; s < report.samples.size(); ++s) {
    auto& smp = report.samples[s];
    const Vec xc = grid.x_center(smp.ix);
    const Vec vc = grid.v_center(smp.iv);
    smp.integral = acc[s];
    smp.bound = kab * std::exp(-alpha * norm2(xc) - beta * norm2(vc)) * fnorm *
                gnorm;
    smp.ratio = smp.bound > 0.0 ? smp.integral / smp.bound : 0.0;
    worst = std::max(worst, smp.ratio);
  }
  report.worst_ratio = worst;
  report.pass = worst <= 1.0;
  return report;
}

}  // namespace kb
