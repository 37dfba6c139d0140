#include <doctest.h>

#include <cmath>
#include <map>
#include <numbers>
#include <optional>
#include <random>

#include "kb/analysis.hpp"

using namespace kb;
namespace {
constexpr double kPi = std::numbers::pi;

struct DeskRun {
  std::shared_ptr<const PhaseGrid> grid;
  std::optional<CollisionQuadrature> quad;
  std::optional<VacuumBarrier> barrier;
  std::optional<KSRun> run;
};

// Shared small near-vacuum run; fraction is relative to the smallness
// threshold.
const KSRun& desk_run(double frac = 0.7) {
  static std::map<double, DeskRun> cache;
  auto& slot = cache[frac];
  if (!slot.run) {
    const double L = PhaseGrid::default_half_width(1.0);
    slot.grid = std::make_shared<PhaseGrid>(2, L, L, 8, 8);
    CollisionKernel kern(0.5, AngularKernel::constant(1.0), 2,
                         KernelMode::NearVacuum);
    slot.quad.emplace(kern, slot.grid, 8);
    const double kab = k_alpha_beta(1.0, 1.0, kern);
    slot.barrier = VacuumBarrier::build(1.0, 1.0, frac * 0.25 / kab, kern);
    const Field f0 = Field::sample_maxwellian(
        slot.grid, {slot.barrier->f0_norm, 1.0, 1.0, 0.0}, 0.0, Frame::Lab);
    SolverOptions opt;
    opt.T = 2.0;
    opt.Nt = 16;
    opt.tol_rel = 1e-7;
    opt.max_iter = 30;
    opt.workers = 2;
    slot.run = ks_solve(f0, *slot.barrier, *slot.quad, opt);
  }
  return *slot.run;
}

}  // namespace

TEST_CASE("finite difference on constants and ramps") {
  auto grid = std::make_shared<PhaseGrid>(2, 2.0, 2.0, 8, 6);
  Field c = Field::zeros(grid, 0.0, Frame::Lab);
  for (auto& v : c.values()) v = 3.5;
  const Field dc = finite_difference(c, {DifferenceOperator::Var::Position, 0, 1});
  for (std::size_t ix = 0; ix < grid->x_cells(); ++ix) {
    int xc[3];
    grid->x_coords(ix, xc);
    if (xc[0] >= grid->Nx - 1) continue;  // zero-extension boundary band
    for (std::size_t iv = 0; iv < grid->v_cells(); ++iv)
      CHECK(dc(ix, iv) == 0.0);
  }

  Field ramp = Field::zeros(grid, 0.0, Frame::Lab);
  for (std::size_t ix = 0; ix < grid->x_cells(); ++ix) {
    const Vec x = grid->x_center(ix);
    for (std::size_t iv = 0; iv < grid->v_cells(); ++iv)
      ramp.at(ix, iv) = 0.7 * x[1];
  }
  const Field dr = finite_difference(ramp, {DifferenceOperator::Var::Position, 1, 1});
  for (std::size_t ix = 0; ix < grid->x_cells(); ++ix) {
    int xc[3];
    grid->x_coords(ix, xc);
    if (xc[1] >= grid->Nx - 1) continue;
    for (std::size_t iv = 0; iv < grid->v_cells(); ++iv)
      CHECK(dr(ix, iv) == doctest::Approx(0.7).epsilon(1e-13));
  }
}

TEST_CASE("finite difference is linear") {
  auto grid = std::make_shared<PhaseGrid>(2, 2.0, 2.0, 6, 6);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  Field f = Field::zeros(grid, 0.0, Frame::Lab);
  Field g = Field::zeros(grid, 0.0, Frame::Lab);
  Field combo = Field::zeros(grid, 0.0, Frame::Lab);
  for (std::size_t c = 0; c < f.values().size(); ++c) {
    f.values()[c] = uni(rng);
    g.values()[c] = uni(rng);
    combo.values()[c] = 2.0 * f.values()[c] - 0.5 * g.values()[c];
  }
  const DifferenceOperator d{DifferenceOperator::Var::Velocity, 1, 1};
  const Field df = finite_difference(f, d);
  const Field dg = finite_difference(g, d);
  const Field dc = finite_difference(combo, d);
  for (std::size_t c = 0; c < dc.values().size(); ++c)
    CHECK(dc.values()[c] ==
          doctest::Approx(2.0 * df.values()[c] - 0.5 * dg.values()[c])
              .epsilon(1e-12));
}

TEST_CASE("finite difference converges to the analytic derivative") {
  auto grid = std::make_shared<PhaseGrid>(2, 3.0, 3.0, 48, 4);
  const MaxwellianSpec m{1.0, 0.8, 1.0, 0.0};
  const Field f = Field::sample_maxwellian(grid, m, 0.0, Frame::Lab);
  double err[2];
  int idx = 0;
  for (int cells : {2, 1}) {
    const Field d =
        finite_difference(f, {DifferenceOperator::Var::Position, 0, cells});
    double worst = 0.0;
    for (std::size_t ix = 0; ix < grid->x_cells(); ++ix) {
      int xc[3];
      grid->x_coords(ix, xc);
      if (xc[0] + cells >= grid->Nx) continue;
      const Vec x = grid->x_center(ix);
      for (std::size_t iv = 0; iv < grid->v_cells(); ++iv) {
        const Vec v = grid->v_center(iv);
        const double exact = -2.0 * m.alpha * x[0] * m(x, v);
        worst = std::max(worst, std::abs(d(ix, iv) - exact));
      }
    }
    err[idx++] = worst;
  }
  // first-order operator: halving h roughly halves the error
  CHECK(err[1] <= 0.65 * err[0]);
}

TEST_CASE("weak norm of the soft potential") {
  // n=2, lambda=1: sup over centered balls is 2 sqrt(pi).
  CHECK(potential_weak_norm(2, 1.0) ==
        doctest::Approx(2.0 * std::sqrt(kPi)).epsilon(1e-14));
  CHECK(potential_weak_norm_numeric(2, 1.0) ==
        doctest::Approx(2.0 * std::sqrt(kPi)).epsilon(1e-3));
  CHECK(potential_weak_norm(2, 0.0) == 1.0);
  CHECK(potential_weak_norm(3, 0.5) ==
        doctest::Approx(potential_weak_norm_numeric(3, 0.5)).epsilon(1e-6));
}

TEST_CASE("potential splitting") {
  SUBCASE("lambda = 0 degenerates to the bounded part") {
    CollisionKernel k(0.0, AngularKernel::constant(1.0), 2,
                      KernelMode::NearMaxwellian);
    const auto split = potential_split(k, 2.0);
    CHECK(split.phi1_ls_norm == 0.0);
    CHECK(split.phi1(0.3) == 0.0);
    CHECK(split.phi2(0.3) == doctest::Approx(1.0));
  }
  CollisionKernel k(0.5, AngularKernel::constant(1.0), 2,
                    KernelMode::NearMaxwellian);
  SUBCASE("pointwise identity and boundedness") {
    const auto split = potential_split(k, 2.0);
    for (int i = 1; i <= 100; ++i) {
      const double r = 0.03 * i;
      CHECK(split.phi1(r) + split.phi2(r) ==
            doctest::Approx(std::pow(r, -0.5)).epsilon(1e-14));
      CHECK(split.phi2(r) <= 1.0 + 1e-14);
    }
  }
  SUBCASE("closed form ||Phi1||_{L^2} = sqrt(pi/3)") {
    const auto split = potential_split(k, 2.0);
    CHECK(split.phi1_ls_norm ==
          doctest::Approx(std::sqrt(kPi / 3.0)).epsilon(1e-12));
    // and against an independent radial quadrature
    const double radial = adaptive_simpson(
        [](double r) {
          return (1.0 / r - 2.0 / std::sqrt(r) + 1.0) * r;
        },
        1e-12, 1.0, 1e-10);
    CHECK(split.phi1_ls_norm ==
          doctest::Approx(std::sqrt(2.0 * kPi * radial)).epsilon(1e-6));
  }
  SUBCASE("non-integer exponent path agrees with the closed form nearby") {
    const auto a = potential_split(k, 2.0);
    const auto b = potential_split(k, 2.0 + 1e-9);
    CHECK(a.phi1_ls_norm == doctest::Approx(b.phi1_ls_norm).epsilon(1e-6));
  }
  SUBCASE("exponent range guard") {
    CHECK_THROWS_AS(potential_split(k, 4.0), std::domain_error);  // s >= n/lambda
    CHECK_THROWS_AS(potential_split(k, 0.5), std::domain_error);
  }
}

TEST_CASE("q-estimate ratios: degeneracy, homogeneity, stability") {
  CollisionKernel kern(0.5, AngularKernel::constant(1.0), 2,
                       KernelMode::NearMaxwellian);
  auto grid = std::make_shared<PhaseGrid>(2, 3.0, 3.0, 4, 8);
  CollisionQuadrature quad(kern, grid, 8);

  SUBCASE("zero inputs give zero ratios") {
    const Field z = Field::zeros(grid, 0.0, Frame::Lab);
    const auto r = q_slice_ratios(z, z, quad, 2.0, 2.0, 4.0, 0);
    CHECK(r.gain == 0.0);
    CHECK(r.loss == 0.0);
  }
  SUBCASE("ratios are scale-invariant, exactly for binary scalings") {
    Field f = Field::sample_maxwellian(grid, {1.0, 1.0, 1.0, 0.0}, 0.0,
                                       Frame::Lab);
    Field g = Field::sample_maxwellian(grid, {0.7, 0.9, 1.2, 0.0}, 0.0,
                                       Frame::Lab);
    const auto base = q_slice_ratios(f, g, quad, 2.0, 2.0, 4.0, 2);
    Field f4 = f;
    for (auto& v : f4.values()) v *= 4.0;
    const auto scaled = q_slice_ratios(f4, g, quad, 2.0, 2.0, 4.0, 2);
    CHECK(scaled.gain == base.gain);
    CHECK(scaled.loss == base.loss);
  }
  SUBCASE("full check passes and rejects bad exponents") {
    const auto rep = q_estimate_check(2.0, 2.0, 4.0, kern, 8, 8, 3.0, 4);
    CHECK(rep.pass);
    CHECK(rep.max_ratio_gain > 0.0);
    CHECK_THROWS_AS(q_estimate_check(2.0, 2.0, 3.0, kern, 8, 8, 3.0, 4),
                    std::domain_error);
  }
}

TEST_CASE("lgamma decay of a traveling envelope") {
  // Synthetic run whose slices are exactly the traveling Maxwellian in
  // trajectory coordinates (a static envelope), lambda = 0, n = 2.
  const double L = PhaseGrid::default_half_width(1.0);
  auto grid = std::make_shared<PhaseGrid>(2, L, L, 10, 10);
  CollisionKernel kern(0.0, AngularKernel::constant(1.0), 2,
                       KernelMode::NearVacuum);
  const double C0 = 2.0;

  const auto make_run = [&](double amplitude) {
    Field f0 = Field::sample_maxwellian(grid, {amplitude, 1.0, 1.0, 0.0}, 0.0,
                                        Frame::Trajectory);
    KSRun run(f0);
    run.grid = grid;
    run.quad = std::make_shared<CollisionQuadrature>(kern, grid, 8);
    run.regime = KernelMode::NearVacuum;
    run.vacuum = VacuumBarrier{1.0, 1.0, amplitude, 1.0, amplitude, kPi};
    run.alpha_norm = run.beta_norm = 1.0;
    run.T = 4.0;
    run.Nt = 8;
    for (int k = 0; k <= run.Nt; ++k) {
      Field s = f0;
      s.set_t(k * run.T / run.Nt);
      run.f.slices.push_back(std::move(s));
    }
    return run;
  };

  const KSRun run = make_run(C0);
  const auto [trace, verdict] = lgamma_decay_check(run);
  CHECK(verdict.pass);
  // gamma = 1 here: L1_v norms decay like (alpha t^2 + beta)^{-1}
  const double expect =
      (1.0 * 0.0 + 1.0) / (1.0 * run.T * run.T + 1.0);
  CHECK(trace.value.back() / trace.value.front() ==
        doctest::Approx(expect).epsilon(0.15));

  // doubling the amplitude doubles the fitted constant
  const auto [trace2, verdict2] = lgamma_decay_check(make_run(2.0 * C0));
  CHECK(verdict2.pass);
  CHECK(trace2.fitted_K ==
        doctest::Approx(2.0 * trace.fitted_K).epsilon(1e-12));
}

TEST_CASE("gradient envelope checks on a desk run") {
  const KSRun& run = desk_run();
  SUBCASE("position gradient stays under the fitted envelope") {
    const auto [trace, verdict] = gradient_gronwall_check(run, 2.0);
    CHECK(verdict.pass);
    CHECK(trace.value.size() == run.f.size());
    CHECK(std::isfinite(trace.fitted_K));
  }
  SUBCASE("velocity gradient respects the linear-in-time envelope") {
    const auto [trace, verdict] = velocity_gradient_check(run, 2.0);
    CHECK(verdict.pass);
    // t = 0: identity up to the fitted constant C >= 1
    CHECK(trace.value.front() <= trace.envelope.front() * (1.0 + 1e-12));
  }
  SUBCASE("lgamma decay holds with the barrier constant") {
    const auto [trace, verdict] = lgamma_decay_check(run);
    CHECK(verdict.pass);
  }
}

TEST_CASE("zero run hits the noise-floor branch of the gradient check") {
  const double L = PhaseGrid::default_half_width(1.0);
  auto grid = std::make_shared<PhaseGrid>(2, L, L, 8, 8);
  CollisionKernel kern(0.5, AngularKernel::constant(1.0), 2,
                       KernelMode::NearVacuum);
  CollisionQuadrature quad(kern, grid, 8);
  const auto barrier = VacuumBarrier::build(1.0, 1.0, 0.0, kern);
  SolverOptions opt;
  opt.T = 1.0;
  opt.Nt = 8;
  const KSRun run =
      ks_solve(Field::zeros(grid, 0.0, Frame::Lab), barrier, quad, opt);
  const auto [trace, verdict] = gradient_gronwall_check(run, 2.0);
  CHECK(verdict.pass);
  CHECK(verdict.notes.find("zero initial gradient") != std::string::npos);
}

TEST_CASE("weighted gradient bound under the stronger smallness condition") {
  SUBCASE("precondition met") {
    const KSRun& run = desk_run(0.7);  // 0.7/4 < 3/16 of the threshold
    const auto [trace, verdict] = weighted_gradient_check(run);
    CHECK_FALSE(verdict.skipped);
    CHECK(verdict.pass);
    CHECK(verdict.worst_ratio <= 1.0);
  }
  SUBCASE("precondition not met is reported as skipped") {
    const KSRun& run = desk_run(0.9);  // 0.9/4 > 3/16
    const auto [trace, verdict] = weighted_gradient_check(run);
    CHECK(verdict.skipped);
  }
}

TEST_CASE("stability traces") {
  const KSRun& base = desk_run();
  SUBCASE("identical runs give the exact zero trace") {
    const KSRun& again = desk_run();
    const auto trace = stability_compare(base, again);
    CHECK(trace.zero_trace);
    CHECK(trace.pass);
    for (double v : trace.rinf) CHECK(v == 0.0);
  }
  SUBCASE("relative perturbation yields bounded no-growth ratios") {
    auto grid = base.grid;
    CollisionKernel kern(0.5, AngularKernel::constant(1.0), 2,
                         KernelMode::NearVacuum);
    CollisionQuadrature quad(kern, grid, 8);
    const double f0n = base.f0_norm * (1.0 + 1e-3);
    const auto barrier = VacuumBarrier::build(1.0, 1.0, f0n, kern);
    const Field g0 = Field::sample_maxwellian(grid, {f0n, 1.0, 1.0, 0.0},
                                              0.0, Frame::Lab);
    SolverOptions opt;
    opt.T = base.T;
    opt.Nt = base.Nt;
    opt.tol_rel = 1e-7;
    opt.max_iter = 30;
    opt.workers = 2;
    const KSRun other = ks_solve(g0, barrier, quad, opt);
    const auto trace = stability_compare(base, other);
    CHECK_FALSE(trace.zero_trace);
    CHECK(trace.pass);
    for (double v : trace.r1) CHECK(std::isfinite(v));
  }
}
