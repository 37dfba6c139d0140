#include "kb/scenario.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>

#include <json.hpp>

#include "kb/barriers.hpp"
#include "kb/parallel.hpp"

namespace kb {

namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;
constexpr double kPi = std::numbers::pi;

double elapsed_s(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

ordered_json verdict_json(const CheckVerdict& v) {
  ordered_json j;
  j["name"] = v.name;
  j["pass"] = v.pass;
  if (v.skipped) j["skipped"] = true;
  j["worst_ratio"] = v.worst_ratio;
  j["location"] = v.location;
  if (!v.notes.empty()) j["notes"] = v.notes;
  return j;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

void write_trace_csv(const std::string& path, const RegularityTrace& tr) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "t,value,envelope\n";
  for (std::size_t k = 0; k < tr.t.size(); ++k) {
    out << format_double(tr.t[k]) << ',' << format_double(tr.value[k]) << ','
        << format_double(k < tr.envelope.size() ? tr.envelope[k] : 0.0)
        << '\n';
  }
}

void write_stability_csv(const std::string& path, const StabilityTrace& tr) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "t,r1,r2,rinf,rweighted\n";
  for (std::size_t k = 0; k < tr.t.size(); ++k)
    out << format_double(tr.t[k]) << ',' << format_double(tr.r1[k]) << ','
        << format_double(tr.r2[k]) << ',' << format_double(tr.rinf[k]) << ','
        << format_double(tr.rweighted[k]) << '\n';
}

ordered_json config_echo(const ScenarioConfig& cfg) {
  ordered_json j;
  j["kernel"] = {{"lambda", cfg.kernel.lambda},
                 {"dim", cfg.kernel.dim},
                 {"angular_form", cfg.kernel.angular.form}};
  j["grid"] = {{"Nx", cfg.grid.Nx},     {"Nv", cfg.grid.Nv},
               {"Nsigma", cfg.grid.Nsigma}, {"Nt", cfg.grid.Nt},
               {"T", cfg.grid.T}};
  j["mode"] = cfg.mode;
  return j;
}

ordered_json iteration_json(const IterationReport& rep) {
  ordered_json j;
  j["converged"] = rep.converged;
  j["monotone_ok"] = rep.monotone_ok;
  j["sandwich_ok"] = rep.sandwich_ok;
  j["initial_gap"] = rep.initial_gap;
  j["final_gap"] = rep.final_gap;
  j["order_scale"] = rep.order_scale;
  if (!rep.notes.empty()) j["notes"] = rep.notes;
  auto& arr = j["iterations"];
  arr = nlohmann::json::array();
  for (const auto& it : rep.iterations)
    arr.push_back({{"n", it.n},
                   {"gap", it.gap},
                   {"ratio", it.ratio},
                   {"worst_order_violation", it.worst_violation}});
  return j;
}

}  // namespace

RunResult run_scenario(const ScenarioConfig& cfg, unsigned workers) {
  const auto t_start = std::chrono::steady_clock::now();
  cfg.validate();
  workers = resolve_workers(workers);

  const CollisionKernel kernel = cfg.make_kernel();
  const bool vacuum = cfg.mode == "near_vacuum";
  const double rate_x =
      vacuum ? cfg.vacuum.alpha : cfg.maxwellian.M2.alpha;
  const double rate_v = vacuum ? cfg.vacuum.beta : cfg.maxwellian.M2.beta;
  const double Lx = cfg.grid.Lx > 0.0 ? cfg.grid.Lx
                                      : PhaseGrid::default_half_width(rate_x);
  const double Lv = cfg.grid.Lv > 0.0 ? cfg.grid.Lv
                                      : PhaseGrid::default_half_width(rate_v);
  auto grid = std::make_shared<PhaseGrid>(cfg.kernel.dim, Lx, Lv, cfg.grid.Nx,
                                          cfg.grid.Nv);
  const CollisionQuadrature quad(kernel, grid, cfg.grid.Nsigma);

  SolverOptions sopt;
  sopt.T = cfg.grid.T;
  sopt.Nt = cfg.grid.Nt;
  sopt.tol_rel = cfg.solver.tol_rel;
  sopt.max_iter = cfg.solver.max_iter;
  sopt.workers = workers;
  sopt.first_link_tol_rel = cfg.solver.first_link_tol_rel;
  sopt.auto_refine_tol = cfg.solver.auto_refine_tol;

  BeginningOptions bopt;
  bopt.T = cfg.grid.T;
  bopt.Nt = cfg.grid.Nt;
  bopt.workers = workers;
  bopt.tol_rel = cfg.solver.first_link_tol_rel;

  ordered_json report;
  report["version"] = kVersion;
  report["scenario"] = cfg.scenario;
  report["config"] = config_echo(cfg);
  report["grid"] = {{"Lx", Lx}, {"Lv", Lv}, {"hx", grid->hx},
                    {"hv", grid->hv}};

  RunResult result;
  bool pass = true;

  BeginningVerdict begin;
  std::optional<KSRun> run;
  std::optional<VacuumBarrier> vbar;
  std::optional<MaxwellianBarrier> mbar;
  const auto t_solve = std::chrono::steady_clock::now();

  if (vacuum) {
    const double kab =
        k_alpha_beta(cfg.vacuum.alpha, cfg.vacuum.beta, kernel);
    const double f0_norm = cfg.vacuum.amplitude > 0.0
                               ? cfg.vacuum.amplitude
                               : cfg.vacuum.amplitude_rel * 0.25 / kab;
    vbar = VacuumBarrier::build(cfg.vacuum.alpha, cfg.vacuum.beta, f0_norm,
                                kernel);
    report["barrier"] = {{"kind", "near_vacuum"},
                         {"k_ab", vbar->k_ab},
                         {"C", vbar->C},
                         {"f0_norm", vbar->f0_norm},
                         {"threshold", 0.25 / vbar->k_ab}};

    const Field f0 = Field::sample_maxwellian(
        grid, {f0_norm, cfg.vacuum.alpha, cfg.vacuum.beta, 0.0}, 0.0,
        Frame::Lab);
    begin = beginning_condition_check(*vbar, f0, quad, bopt);
    run = ks_solve(f0, *vbar, quad, sopt);
  } else {
    mbar = MaxwellianBarrier::build(cfg.maxwellian.M, cfg.maxwellian.M1,
                                    cfg.maxwellian.M2, cfg.maxwellian.eps,
                                    kernel);
    ordered_json bj;
    bj["kind"] = "near_maxwellian";
    bj["k2"] = mbar->k2;
    bj["k"] = mbar->k;
    bj["margin"] = mbar->margin;
    bj["critical_t"] = std::isfinite(mbar->critical_t)
                           ? ordered_json(mbar->critical_t)
                           : ordered_json(nullptr);
    bj["phi_sups"] = {{"phi1", mbar->sups.phi1},
                      {"phi2", mbar->sups.phi2},
                      {"sum", mbar->sups.sum},
                      {"diff", mbar->sups.diff}};
    {
      auto& prof = bj["profile"];
      prof = nlohmann::json::array();
      for (double t = 1.0; t <= 1024.0; t *= 2.0) {
        if (t >= mbar->critical_t) break;
        prof.push_back({{"t", t}, {"C1", mbar->c1(t)}, {"C2", mbar->c2(t)}});
      }
    }
    report["barrier"] = bj;

    // Default datum: the target envelope, exact in trajectory coordinates.
    const Field f0_sharp = Field::sample_maxwellian(
        grid,
        {cfg.maxwellian.M.C, cfg.maxwellian.M.alpha, cfg.maxwellian.M.beta,
         0.0},
        1.0, Frame::Trajectory);
    const Field f0_lab = Field::sample_maxwellian(grid, cfg.maxwellian.M, 0.0,
                                                  Frame::Lab);
    const auto sandwich = sandwich_check(f0_lab, cfg.maxwellian.M1,
                                         cfg.maxwellian.M2, cfg.maxwellian.M,
                                         cfg.maxwellian.eps);
    report["sandwich"] = {{"pass", sandwich.pass},
                          {"d1", sandwich.d1},
                          {"d2", sandwich.d2},
                          {"worst_lower", sandwich.worst_lower},
                          {"worst_upper", sandwich.worst_upper}};
    if (!sandwich.pass) pass = false;

    begin = beginning_condition_check(*mbar, f0_sharp, quad, bopt);
    run = ks_solve(f0_sharp, *mbar, quad, sopt);
  }

  {
    ordered_json bj;
    bj["pass"] = begin.pass;
    bj["worst_violation"] = begin.worst_violation;
    bj["where"] = begin.where;
    if (!begin.points.empty()) {
      auto& pts = bj["points"];
      pts = nlohmann::json::array();
      for (const auto& p : begin.points)
        pts.push_back({{"t", p.t},
                       {"x", {p.x[0], p.x[1], p.x[2]}},
                       {"v", {p.v[0], p.v[1], p.v[2]}},
                       {"lower_lhs", p.lower_lhs},
                       {"lower_rhs", p.lower_rhs},
                       {"lower_tol", p.lower_tol},
                       {"upper_lhs", p.upper_lhs},
                       {"upper_rhs", p.upper_rhs},
                       {"upper_tol", p.upper_tol},
                       {"pass", p.pass}});
    }
    report["beginning_condition"] = bj;
    if (!begin.pass) pass = false;
  }

  report["iteration"] = iteration_json(run->report);
  if (!run->report.converged || !run->report.monotone_ok ||
      !run->report.sandwich_ok)
    pass = false;
  const double solve_seconds = elapsed_s(t_solve);

  // Artifacts.
  const fs::path dir = fs::path(cfg.out_dir) / cfg.scenario;
  fs::create_directories(dir / "traces");
  result.artifact_dir = dir.string();

  const auto t_checks = std::chrono::steady_clock::now();
  auto& checks_json = report["checks"];
  checks_json = nlohmann::json::array();
  const auto add_verdict = [&](const CheckVerdict& v) {
    checks_json.push_back(verdict_json(v));
    result.verdicts.push_back(v);
    if (!v.pass && !v.skipped) pass = false;
  };

  for (const std::string& name : cfg.checks.enabled) {
    if (name == "gronwall") {
      auto [trace, verdict] =
          gradient_gronwall_check(*run, cfg.checks.gronwall_p);
      write_trace_csv((dir / "traces" / "gronwall.csv").string(), trace);
      add_verdict(verdict);
    } else if (name == "velocity_gradient") {
      auto [trace, verdict] =
          velocity_gradient_check(*run, cfg.checks.velocity_gradient_p);
      write_trace_csv((dir / "traces" / "velocity_gradient.csv").string(),
                      trace);
      add_verdict(verdict);
    } else if (name == "lgamma") {
      auto [trace, verdict] = lgamma_decay_check(*run);
      write_trace_csv((dir / "traces" / "lgamma.csv").string(), trace);
      add_verdict(verdict);
    } else if (name == "weighted_gradient") {
      auto [trace, verdict] = weighted_gradient_check(*run);
      write_trace_csv((dir / "traces" / "weighted_gradient.csv").string(),
                      trace);
      add_verdict(verdict);
    } else if (name == "residual") {
      const auto res = mild_residual_trace(*run, workers);
      RegularityTrace trace;
      for (std::size_t k = 0; k < res.size(); ++k) {
        trace.t.push_back(run->lab_time(k + 1));
        trace.value.push_back(res[k]);
        trace.envelope.push_back(0.0);
      }
      write_trace_csv((dir / "traces" / "residual.csv").string(), trace);
      CheckVerdict v;
      v.name = "mild_residual";
      v.worst_ratio =
          res.empty() ? 0.0 : *std::max_element(res.begin(), res.end());
      v.pass = std::isfinite(v.worst_ratio);
      v.notes = "max |df#/dt - Q#(f,f)| over interior nodes";
      add_verdict(v);
    } else if (name == "stability") {
      const double delta = cfg.checks.stability_delta;
      std::optional<KSRun> other;
      if (vacuum) {
        const double f0n = vbar->f0_norm * (1.0 + delta);
        const auto b2 = VacuumBarrier::build(cfg.vacuum.alpha,
                                             cfg.vacuum.beta, f0n, kernel);
        const Field g0 = Field::sample_maxwellian(
            grid, {f0n, cfg.vacuum.alpha, cfg.vacuum.beta, 0.0}, 0.0,
            Frame::Lab);
        other = ks_solve(g0, b2, quad, sopt);
      } else {
        Field g0 = run->f0_sharp;
        for (auto& x : g0.values()) x *= 1.0 + delta;
        other = ks_solve(g0, *mbar, quad, sopt);
      }
      const auto trace = stability_compare(*run, *other);
      write_stability_csv((dir / "traces" / "stability.csv").string(), trace);
      CheckVerdict v;
      v.name = "stability";
      v.pass = trace.pass;
      double worst = 0.0;
      for (double r : trace.r1) worst = std::max(worst, r);
      for (double r : trace.r2) worst = std::max(worst, r);
      for (double r : trace.rinf) worst = std::max(worst, r);
      for (double r : trace.rweighted) worst = std::max(worst, r);
      v.worst_ratio = worst;
      v.notes = trace.zero_trace ? "zero initial difference"
                                 : "delta = " + std::to_string(delta);
      add_verdict(v);
    }
  }
  const double checks_seconds = elapsed_s(t_checks);

  // Solution series, lab frame, strided.
  {
    const int stride = cfg.output_stride > 0
                           ? cfg.output_stride
                           : std::max(1, cfg.grid.Nt / 8);
    FieldSeries lab;
    for (std::size_t k = 0; k < run->f.size();
         k += static_cast<std::size_t>(stride)) {
      Field slice = from_trajectory(run->f[k]);
      slice.set_t(run->lab_time(k));
      lab.slices.push_back(std::move(slice));
    }
    write_fields_csv(lab, (dir / "fields.csv").string(),
                     (dir / "fields_meta.json").string());
    report["fields"] = {{"stride", stride},
                        {"slices", lab.slices.size()},
                        {"frame", "lab"}};
  }

  report["pass"] = pass;
  write_text((dir / "report.json").string(), report.dump(2) + "\n");

  ordered_json manifest;
  manifest["version"] = kVersion;
  manifest["compiler"] = __VERSION__;
  manifest["scenario"] = cfg.scenario;
  manifest["workers"] = workers;
  manifest["pass"] = pass;
  {
    auto& vj = manifest["verdicts"];
    vj = nlohmann::json::array();
    vj.push_back({{"name", "beginning_condition"}, {"pass", begin.pass}});
    vj.push_back({{"name", "iteration"},
                  {"pass", run->report.converged && run->report.monotone_ok &&
                               run->report.sandwich_ok}});
    for (const auto& v : result.verdicts)
      vj.push_back({{"name", v.name},
                    {"pass", v.pass},
                    {"skipped", v.skipped}});
  }
  manifest["timings_seconds"] = {{"total", elapsed_s(t_start)},
                                 {"solve", solve_seconds},
                                 {"checks", checks_seconds}};
  manifest["artifacts"] = {"fields.csv", "fields_meta.json", "report.json",
                           "manifest.json", "traces/"};
  write_text((dir / "manifest.json").string(), manifest.dump(2) + "\n");

  result.pass = pass;
  ordered_json summary;
  summary["scenario"] = cfg.scenario;
  summary["pass"] = pass;
  summary["artifacts"] = result.artifact_dir;
  summary["converged"] = run->report.converged;
  summary["final_gap"] = run->report.final_gap;
  {
    auto& vj = summary["verdicts"];
    vj = nlohmann::json::array();
    vj.push_back({{"name", "beginning_condition"}, {"pass", begin.pass}});
    for (const auto& v : result.verdicts) {
      ordered_json one{{"name", v.name}, {"pass", v.pass}};
      if (v.skipped) one["skipped"] = true;
      if (!v.pass && !v.notes.empty()) one["notes"] = v.notes;
      vj.push_back(one);
    }
  }
  result.summary_json = summary.dump(2);
  return result;
}

// ---------------------------------------------------------------------------
// verify

namespace {

Vec rand_vec(std::mt19937_64& rng, double scale, int n) {
  std::uniform_real_distribution<double> uni(-scale, scale);
  Vec v{0, 0, 0};
  for (int d = 0; d < n; ++d) v[d] = uni(rng);
  return v;
}

Vec rand_sigma(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> gauss;
  Vec s{0, 0, 0};
  double r = 0.0;
  while (r < 1e-8) {
    for (int d = 0; d < n; ++d) s[d] = gauss(rng);
    r = norm(s);
  }
  return (1.0 / r) * s;
}

}  // namespace

VerifyReport verify_suite(const std::string& inject_fault) {
  const auto t0 = std::chrono::steady_clock::now();
  VerifyReport rep;
  const auto add = [&](const std::string& name, bool pass, double worst,
                       const std::string& detail) {
    rep.items.push_back({name, pass, worst, detail});
  };

  {  // sphere areas
    const double w =
        std::max({std::abs(sphere_area(2) - 2.0 * kPi) / (2.0 * kPi),
                  std::abs(sphere_area(3) - 4.0 * kPi) / (4.0 * kPi),
                  std::abs(sphere_area(4) - 2.0 * kPi * kPi) /
                      (2.0 * kPi * kPi)});
    add("sphere_area_closed_forms", w <= 1e-10, w, "n = 2, 3, 4");
  }
  {  // angular norms
    const auto one = AngularKernel::constant(1.0);
    const auto abs1 = AngularKernel::power(1.0);
    const double w = std::max(
        {std::abs(angular_norm(one, 2) - 2.0 * kPi) / (2.0 * kPi),
         std::abs(angular_norm(one, 3) - 4.0 * kPi) / (4.0 * kPi),
         std::abs(angular_norm(abs1, 3) - 2.0 * kPi) / (2.0 * kPi)});
    add("angular_norm_closed_forms", w <= 1e-10, w,
        "unit and |s| kernels on S^1, S^2");
  }
  {  // collision geometry conservation (optionally fault-injected)
    const bool broken = inject_fault == "post_collision_sign";
    std::mt19937_64 rng(1234);
    double worst = 0.0;
    for (int n : {2, 3}) {
      for (int trial = 0; trial < 10000; ++trial) {
        const Vec v = rand_vec(rng, 5.0, n);
        const Vec vs = rand_vec(rng, 5.0, n);
        const Vec sg = rand_sigma(rng, n);
        PostCollision pc = post_collision(v, vs, sg, n);
        if (broken) {
          const double us = dot(v - vs, sg);
          pc.v_star = vs - us * sg;  // harness fault: wrong recoil sign
        }
        const double scale = 1.0 + norm(v) + norm(vs);
        const double dp = norm((pc.v + pc.v_star) - (v + vs)) / scale;
        const double de = std::abs(norm2(pc.v) + norm2(pc.v_star) -
                                   norm2(v) - norm2(vs)) /
                          (scale * scale);
        worst = std::max({worst, dp, de});
      }
    }
    add("post_collision_conservation", worst <= 1e-12, worst,
        "momentum/energy conservation over 2x10^4 random collisions");
  }
  {  // trajectory identity
    std::mt19937_64 rng(4321);
    double worst = 0.0;
    for (int n : {2, 3}) {
      for (int trial = 0; trial < 10000; ++trial) {
        const Vec x = rand_vec(rng, 3.0, n);
        const Vec v = rand_vec(rng, 4.0, n);
        const Vec vs = rand_vec(rng, 4.0, n);
        const Vec sg = rand_sigma(rng, n);
        std::uniform_real_distribution<double> ut(0.0, 10.0);
        const double tau = ut(rng);
        const double bound =
            1e-12 * (1.0 + norm2(x) + norm2(v - vs) * tau * tau);
        const double res =
            trajectory_identity_residual(x, v, vs, sg, tau, n);
        worst = std::max(worst, res / bound);
      }
    }
    add("trajectory_identity", worst <= 1.0, worst,
        "2x10^4 random samples against the quadratic identity");
  }
  {  // k scaling
    const CollisionKernel k(0.5, AngularKernel::constant(1.0), 2,
                            KernelMode::NearVacuum);
    bool ok = true;
    for (double alpha : {0.5, 1.0, 2.7})
      for (double beta : {0.4, 1.0, 3.0}) {
        const double base = k_alpha_beta(alpha, beta, k);
        if (k_alpha_beta(4.0 * alpha, beta, k) != 0.5 * base) ok = false;
        if (!(k_alpha_beta(alpha, 2.0 * beta, k) < base)) ok = false;
      }
    add("k_constant_scaling", ok, ok ? 0.0 : 1.0,
        "alpha^(-1/2) scaling exact; monotone decreasing in beta");
  }
  {  // fixed-point algebra
    double worst = 0.0;
    for (int i = 0; i < 10; ++i) {
      const double k = std::pow(10.0, -3.0 + 6.0 * i / 9.0);
      for (int j = 1; j <= 10; ++j) {
        const double f0 = (j / 10.0) * 0.25 / k;
        const double C = vacuum_fixed_point(f0, k);
        worst = std::max(worst, std::abs(f0 + k * C * C - C) /
                                    std::max(C, 1e-300));
      }
    }
    const double hand = std::abs(vacuum_fixed_point(3.0 / 16.0, 1.0) - 0.25);
    worst = std::max(worst, hand);
    add("vacuum_fixed_point_algebra", worst <= 1e-14, worst,
        "quadratic identity on a 100-point sweep plus the 1/4 hand value");
  }
  {  // barrier profile product and slope
    MaxwellianBarrier b;
    b.M1 = {1.0, 1.0, 1.0, 1.0};
    b.M2 = {2.0, 1.0, 1.0, 1.0};
    b.sups = {0.175, 0.125, 0.3, 0.05};
    b.k2 = barrier_k2(1.0, 2.0, b.sups);
    b.k = std::sqrt(b.k2);
    b.mu = 1.0;
    b.t_exponent = 2.0;
    b.kappa = b.k * (b.sups.sum + b.sups.diff) / b.mu;
    b.margin = boundedness_margin(2.0, b.k, b.sups.sum, b.sups.diff, b.mu);

    double worst_prod = 0.0;
    for (double t : {1.0, 2.0, 10.0, 100.0, 1000.0})
      worst_prod = std::max(
          worst_prod, std::abs(b.c1(t) * b.c2(t) - 2.0) / 2.0);
    add("barrier_amplitude_product", worst_prod <= 1e-10, worst_prod,
        "C1(t) C2(t) constant over t in [1, 10^3]");

    const auto rhs2 = [&](double t) {
      const double c1 = b.c1(t), c2 = b.c2(t);
      return ((c2 * c2 - c1 * c2) * b.sups.sum +
              (c2 * c2 + c1 * c2) * b.sups.diff) /
             (2.0 * std::pow(t, b.t_exponent));
    };
    double res[2];
    int idx = 0;
    for (double dt : {1e-2, 1e-3}) {
      double worst = 0.0;
      for (double t : {1.5, 2.0, 4.0, 8.0}) {
        const double num = (b.c2(t + dt) - b.c2(t - dt)) / (2.0 * dt);
        worst = std::max(worst, std::abs(num - rhs2(t)));
      }
      res[idx++] = worst;
    }
    const bool quad_decay = res[1] <= res[0] / 30.0 && res[0] <= 1e-3;
    add("barrier_profile_slope", quad_decay, res[1],
        "central-difference residual decays quadratically in the step");
  }
  {  // potential split and weak norm
    const CollisionKernel k(0.5, AngularKernel::constant(1.0), 2,
                            KernelMode::NearMaxwellian);
    const auto split = potential_split(k, 2.0);
    double worst = std::abs(split.phi1_ls_norm - std::sqrt(kPi / 3.0)) /
                   std::sqrt(kPi / 3.0);
    for (int i = 1; i <= 100; ++i) {
      const double r = 0.04 * i;
      worst = std::max(worst, std::abs(split.phi1(r) + split.phi2(r) -
                                       std::pow(r, -0.5)) /
                                  std::pow(r, -0.5));
    }
    const double wn = std::abs(potential_weak_norm_numeric(2, 1.0) -
                               2.0 * std::sqrt(kPi)) /
                      (2.0 * std::sqrt(kPi));
    worst = std::max(worst, wn);
    add("potential_split_and_weak_norm", worst <= 1e-3, worst,
        "splitting identity, ||Phi1||_{L2} = sqrt(pi/3), weak norm 2 sqrt(pi)");
  }

  rep.pass = true;
  for (const auto& item : rep.items)
    if (!item.pass) rep.pass = false;
  rep.seconds = elapsed_s(t0);
  return rep;
}

std::string VerifyReport::to_json() const {
  ordered_json j;
  j["pass"] = pass;
  j["seconds"] = seconds;
  auto& arr = j["checks"];
  arr = nlohmann::json::array();
  for (const auto& item : items)
    arr.push_back({{"name", item.name},
                   {"pass", item.pass},
                   {"worst", item.worst},
                   {"detail", item.detail}});
  return j.dump(2);
}

std::string VerifyReport::to_text() const {
  std::string out;
  for (const auto& item : items) {
    out += item.pass ? "PASS " : "FAIL ";
    out += item.name + " (worst " + format_double(item.worst) + ") - " +
           item.detail + "\n";
  }
  out += pass ? "verify: all checks passed" : "verify: FAILURES above";
  out += " [" + format_double(seconds) + " s]\n";
  return out;
}

// ---------------------------------------------------------------------------
// bench

BenchReport bench_scenario(const ScenarioConfig& cfg, unsigned max_workers) {
  cfg.validate();
  const CollisionKernel kernel = cfg.make_kernel();
  const bool vacuum = cfg.mode == "near_vacuum";
  const double rate_x = vacuum ? cfg.vacuum.alpha : cfg.maxwellian.M2.alpha;
  const double rate_v = vacuum ? cfg.vacuum.beta : cfg.maxwellian.M2.beta;
  const double Lx = cfg.grid.Lx > 0.0 ? cfg.grid.Lx
                                      : PhaseGrid::default_half_width(rate_x);
  const double Lv = cfg.grid.Lv > 0.0 ? cfg.grid.Lv
                                      : PhaseGrid::default_half_width(rate_v);
  auto grid = std::make_shared<PhaseGrid>(cfg.kernel.dim, Lx, Lv, cfg.grid.Nx,
                                          cfg.grid.Nv);
  const CollisionQuadrature quad(kernel, grid, cfg.grid.Nsigma);
  const Field f = Field::sample_maxwellian(grid, {1.0, rate_x, rate_v, 0.0},
                                           0.0, Frame::Lab);

  const auto time_gain = [&](const CollisionQuadrature& q, unsigned w) {
    double best = std::numeric_limits<double>::infinity();
    for (int rep = 0; rep < 3; ++rep) {
      const auto t0 = std::chrono::steady_clock::now();
      const Field out = gain(f, f, q, w);
      best = std::min(best, elapsed_s(t0));
    }
    return best;
  };

  BenchReport rep;
  max_workers = std::max(1u, resolve_workers(max_workers));
  for (unsigned w = 1; w <= max_workers; w *= 2) {
    BenchEntry e;
    e.workers = w;
    e.seconds_per_gain = time_gain(quad, w);
    e.xcells_per_second =
        static_cast<double>(grid->x_cells()) / e.seconds_per_gain;
    rep.entries.push_back(e);
    if (w == max_workers) break;
    if (2 * w > max_workers && w != max_workers) {
      BenchEntry last;
      last.workers = max_workers;
      last.seconds_per_gain = time_gain(quad, max_workers);
      last.xcells_per_second =
          static_cast<double>(grid->x_cells()) / last.seconds_per_gain;
      rep.entries.push_back(last);
      break;
    }
  }

  const Field a = gain(f, f, quad, 1);
  const Field b = gain(f, f, quad, 1);
  rep.deterministic = a.values() == b.values();

  const CollisionQuadrature quad2(kernel, grid, 2 * cfg.grid.Nsigma);
  rep.nsigma_cost_ratio =
      time_gain(quad2, 1) / rep.entries.front().seconds_per_gain;
  return rep;
}

std::string BenchReport::to_json() const {
  ordered_json j;
  auto& arr = j["throughput"];
  arr = nlohmann::json::array();
  for (const auto& e : entries)
    arr.push_back({{"workers", e.workers},
                   {"seconds_per_gain", e.seconds_per_gain},
                   {"xcells_per_second", e.xcells_per_second}});
  j["single_worker_deterministic"] = deterministic;
  j["nsigma_doubling_cost_ratio"] = nsigma_cost_ratio;
  return j.dump(2);
}

std::string BenchReport::to_text() const {
  std::string out = "gain quadrature throughput:\n";
  for (const auto& e : entries)
    out += "  workers " + std::to_string(e.workers) + ": " +
           format_double(e.seconds_per_gain) + " s/gain, " +
           format_double(e.xcells_per_second) + " x-cells/s\n";
  out += std::string("single-worker deterministic: ") +
         (deterministic ? "yes" : "NO") + "\n";
  out += "Nsigma doubling cost ratio: " + format_double(nsigma_cost_ratio) +
         "\n";
  return out;
}

}  // namespace kb
