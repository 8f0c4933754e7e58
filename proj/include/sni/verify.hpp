#ifndef SNI_VERIFY_HPP
#define SNI_VERIFY_HPP

// Acceptance criteria, shared by the acceptance binary and `sni verify`.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "sni/datagen.hpp"
#include "sni/decomp.hpp"
#include "sni/fem.hpp"
#include "sni/geometry.hpp"
#include "sni/schwarz.hpp"
#include "sni/symmetry.hpp"

namespace sni::verify {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

struct TestProblem {
  TriMesh mesh;
  ProblemSpec spec;
  std::uint64_t seed = 0;
};

// Pinned tolerances.
inline constexpr double kOracleTarget = 1e-6;
inline constexpr std::size_t kOracleMaxIterations = 2000;
inline constexpr double kCaseTimeLimit = 60.0;
inline constexpr double kTailR2 = 0.99;
inline constexpr std::size_t kTailWindow = 20;
inline constexpr double kTheoremSafety = 3.0;
inline constexpr double kTheoremPassFraction = 0.95;
inline constexpr double kLinearityFactor = 2.0;
inline constexpr double kSymmetryTol = 1e-7;
inline constexpr double kRoundTripTol = 1e-8;
inline constexpr double kDepthSpread = 1e-6;
inline constexpr double kAblationTimeLimit = 300.0;
inline constexpr double kHeatTol = 1e-5;
inline constexpr double kNonlinearTol = 1e-5;

/// Random polygon mesh with a vertex count in [min_vertices, max_vertices]
/// (meshing target 0.05), searching successive seeds from `seed`.
inline TriMesh random_test_mesh(std::uint64_t seed, std::size_t min_vertices = 300, std::size_t max_vertices = 600,
                                double target = 0.05) {
  for (std::uint64_t s = seed; s < seed + 1000; ++s) {
    auto mesh = triangulate(random_simple_polygon(3, 12, Box2{}, s), target);
    if (mesh.num_vertices() >= min_vertices && mesh.num_vertices() <= max_vertices) return mesh;
  }
  throw GenerationError("no mesh in the requested size range");
}

/// Random problem on a random mesh. Mixed problems always carry a Neumann arc.
inline TestProblem random_test_problem(Equation eq, std::uint64_t seed, std::size_t min_vertices = 300,
                                       std::size_t max_vertices = 600) {
  TestProblem p;
  p.mesh = random_test_mesh(seed, min_vertices, max_vertices);
  p.seed = seed;
  for (std::uint64_t s = seed;; ++s) {
    auto sample = sample_boundary(eq, p.mesh, s);
    if (eq == Equation::LaplaceMixed && sample.spec.neumann.empty()) continue;
    p.mesh = std::move(sample.mesh);
    p.spec = std::move(sample.spec);
    return p;
  }
}

/// Coefficient of determination of a least-squares line through log(y).
inline double log_linear_r2(std::span<const double> y) {
  const std::size_t n = y.size();
  if (n < 3) return 0.0;
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(y[i] > 0.0)) return 0.0;
    const double x = static_cast<double>(i), ly = std::log(y[i]);
    sx += x;
    sy += ly;
    sxx += x * x;
    sxy += x * ly;
    syy += ly * ly;
  }
  const double dn = static_cast<double>(n);
  const double cov = sxy - sx * sy / dn, vx = sxx - sx * sx / dn, vy = syy - sy * sy / dn;
  if (vy <= 0.0) return 1.0;
  return cov * cov / (vx * vy);
}

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------------------
// 1 + 2: oracle equivalence and contraction
// ---------------------------------------------------------------------------

inline std::vector<CriterionResult> oracle_and_contraction(std::size_t threads = 1, std::ostream* log = nullptr) {
  const auto t0 = std::chrono::steady_clock::now();
  std::size_t cases = 0, ok1 = 0, ok2 = 0;
  std::ostringstream fail1, fail2;
  double worst_err = 0.0, worst_time = 0.0, min_r2 = 1.0, max_rho = 0.0;
  std::size_t max_iters = 0;
  const Equation eqs[] = {Equation::LaplaceDirichlet, Equation::LaplaceMixed, Equation::Darcy};
  constexpr std::size_t kMeshes = 5;
  for (std::size_t m = 0; m < kMeshes; ++m) {
    for (Equation eq : eqs) {
      const auto prob = random_test_problem(eq, 1000 + 37 * m);
      const Field exact = solve_direct(prob.mesh, prob.spec);
      for (std::size_t k : {4u, 8u, 20u}) {
        const auto tc = std::chrono::steady_clock::now();
        SniConfig cfg(k, 2, 0.8 / static_cast<double>(k), 1e-14, kOracleMaxIterations);
        cfg.threads = threads;
        cfg.oracle = exact;
        cfg.oracle_stop = kOracleTarget;
        const auto r = sni_run(cfg, prob.mesh, prob.spec);
        const double secs = seconds_since(tc);
        const auto& d = r.diagnostics;
        const double err = d.errors.empty() ? 1.0 : d.errors.back();
        const bool pass1 = err <= kOracleTarget && d.iterations <= kOracleMaxIterations && secs <= kCaseTimeLimit;
        const std::size_t w = std::min(kTailWindow, d.update_norms.size());
        const double r2 = log_linear_r2(std::span<const double>(d.update_norms).last(w));
        const bool pass2 = d.rho_hat && *d.rho_hat < 1.0 && w == kTailWindow && r2 >= kTailR2;
        ++cases;
        ok1 += pass1;
        ok2 += pass2;
        worst_err = std::max(worst_err, err);
        worst_time = std::max(worst_time, secs);
        max_iters = std::max(max_iters, d.iterations);
        min_r2 = std::min(min_r2, r2);
        max_rho = std::max(max_rho, d.rho_hat.value_or(1.0));
        std::ostringstream line;
        line << to_string(eq) << " mesh=" << m << " n=" << prob.mesh.num_vertices() << " K=" << k
             << " iters=" << d.iterations << " err=" << err << " rho=" << d.rho_hat.value_or(-1.0) << " R2=" << r2
             << " t=" << d.overlap_factor << " " << secs << "s";
        if (log) *log << "  " << line.str() << '\n';
        if (!pass1) fail1 << " [" << line.str() << "]";
        if (!pass2) fail2 << " [" << line.str() << "]";
      }
    }
  }
  const double total = seconds_since(t0);
  CriterionResult c1{1, "oracle equivalence", ok1 == cases, "", total};
  std::ostringstream d1;
  d1 << ok1 << "/" << cases << " cases reach l2 error <= " << kOracleTarget << " within " << kOracleMaxIterations
     << " iterations; worst error " << worst_err << ", max iterations " << max_iters << ", slowest case " << worst_time
     << "s" << fail1.str();
  c1.detail = d1.str();
  CriterionResult c2{2, "contraction", ok2 == cases, "", 0.0};
  std::ostringstream d2;
  d2 << ok2 << "/" << cases << " runs with rho_hat < 1 and tail R^2 >= " << kTailR2 << "; max rho_hat " << max_rho
     << ", min R^2 " << min_r2 << fail2.str();
  c2.detail = d2.str();
  return {c1, c2};
}

// ---------------------------------------------------------------------------
// 3: error transfer under a perturbed local solver
// ---------------------------------------------------------------------------

inline CriterionResult theorem1_bound(std::size_t threads = 1, std::ostream* log = nullptr) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto prob = random_test_problem(Equation::LaplaceDirichlet, 3001);
  const Field exact = solve_direct(prob.mesh, prob.spec);
  constexpr std::size_t k = 8;
  const double tau = 0.8 / k;

  // Contraction rate from the exact solver on the same decomposition.
  SniConfig base(k, 2, tau, 1e-14, 4000);
  base.threads = threads;
  base.oracle = exact;
  base.oracle_stop = 1e-10;
  const auto ref = sni_run(base, prob.mesh, prob.spec);
  const double rho = ref.diagnostics.rho_hat.value_or(1.0);
  const std::size_t t = ref.diagnostics.overlap_factor;
  // Enough iterations for the initial error to fall far below the noise floor.
  const std::size_t iters = ref.diagnostics.iterations + 50;
  const double enorm = norm2(exact);

  constexpr std::size_t kTrials = 20;
  const double levels[] = {0.005, 0.01, 0.02};
  bool all_ok = true;
  std::ostringstream detail;
  detail << "rho_hat=" << rho << " t=" << t << " tau=" << tau << ";";
  std::vector<double> mean_ratio;
  for (double c : levels) {
    std::size_t within = 0;
    double sum_err = 0.0, worst_ratio = 0.0;
    for (std::size_t trial = 0; trial < kTrials; ++trial) {
      SniConfig cfg(k, 2, tau, 1e-300, iters);
      cfg.threads = threads;
      cfg.local_solver = LocalSolverSpec::perturbed(c, 7919 * (trial + 1));
      const auto r = sni_run(cfg, prob.mesh, prob.spec);
      const double err = diff_norm2(r.u, exact);
      const double bound = kTheoremSafety * tau * static_cast<double>(t) * r.diagnostics.c_abs_max / (1.0 - rho);
      within += err <= bound;
      sum_err += err;
      worst_ratio = std::max(worst_ratio, err / bound);
    }
    const double frac = static_cast<double>(within) / kTrials;
    const double mean_err = sum_err / kTrials;
    mean_ratio.push_back(mean_err / c);
    if (frac < kTheoremPassFraction) all_ok = false;
    detail << " c=" << c << ": " << within << "/" << kTrials << " within bound, mean |u~-u*|=" << mean_err
           << " (rel " << mean_err / enorm << "), worst err/bound=" << worst_ratio << ";";
    if (log) *log << "  c=" << c << " within=" << within << " mean_err=" << mean_err << " worst ratio=" << worst_ratio << '\n';
  }
  const double lin = *std::max_element(mean_ratio.begin(), mean_ratio.end()) /
                     *std::min_element(mean_ratio.begin(), mean_ratio.end());
  const bool linear = lin <= kLinearityFactor;
  detail << " error/c spread factor " << lin << " (limit " << kLinearityFactor << ")";
  return {3, "theorem-1 error bound", all_ok && linear, detail.str(), seconds_since(t0)};
}

// ---------------------------------------------------------------------------
// 4: step-size guard
// ---------------------------------------------------------------------------

inline CriterionResult config_guard() {
  const auto t0 = std::chrono::steady_clock::now();
  auto rejects = [](std::size_t k, double tau) {
    try {
      SniConfig cfg(k, 2, tau);
      return false;
    } catch (const ConfigError&) {
      return true;
    }
  };
  bool ok = true;
  std::ostringstream d;
  for (std::size_t k : {1u, 4u, 20u}) {
    const double lim = 1.0 / static_cast<double>(k);
    const bool r_eq = rejects(k, lim), r_above = rejects(k, 1.5 * lim), r_zero = rejects(k, 0.0),
               r_neg = rejects(k, -0.1), r_ok = !rejects(k, 0.8 * lim);
    ok = ok && r_eq && r_above && r_zero && r_neg && r_ok;
    d << "K=" << k << ": tau=1/K " << (r_eq ? "rejected" : "ACCEPTED") << ", tau=1.5/K "
      << (r_above ? "rejected" : "ACCEPTED") << ", tau=0.8/K " << (r_ok ? "accepted" : "REJECTED") << "; ";
  }
  return {4, "step-size guard", ok, d.str(), seconds_since(t0)};
}

// ---------------------------------------------------------------------------
// 5: symmetry suite
// ---------------------------------------------------------------------------

enum class TransformKind { SpatialShift, SpatialRotation, SpatialScaling, ValueShift, ValueScaling };

inline const char* to_string(TransformKind t) {
  switch (t) {
    case TransformKind::SpatialShift: return "spatial-shift";
    case TransformKind::SpatialRotation: return "spatial-rotation";
    case TransformKind::SpatialScaling: return "spatial-scaling";
    case TransformKind::ValueShift: return "value-shift";
    case TransformKind::ValueScaling: return "value-scaling";
  }
  return "?";
}

inline std::vector<TransformKind> admitted_transforms(Equation e) {
  std::vector<TransformKind> t{TransformKind::SpatialShift, TransformKind::SpatialRotation, TransformKind::SpatialScaling};
  if (admits_value_transform(e)) {
    t.push_back(TransformKind::ValueShift);
    t.push_back(TransformKind::ValueScaling);
  }
  return t;
}

/// A local problem cut from a random mesh: subdomain of a 4-way
/// decomposition with random artificial-boundary data. Heat problems carry
/// per-step boundary data on the subdomain.
inline std::pair<TriMesh, ProblemSpec> random_local_problem(Equation eq, std::uint64_t seed) {
  auto poly = random_simple_polygon(3, 12, Box2{}, seed);
  auto mesh = triangulate(poly, 0.1);
  auto sample = sample_boundary(eq, mesh, seed + 1);
  if (eq == Equation::Heat) sample.spec.n_steps = 4, sample.spec.dirichlet_steps.resize(5);
  const auto g = build_adjacency(sample.mesh);
  const std::size_t k = std::min<std::size_t>(4, g.n);
  const auto dec = extend(g, partition(g, k, seed), 1);
  std::mt19937_64 rng(seed + 2);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Field u(sample.mesh.num_vertices());
  for (double& x : u) x = unit(rng);
  const auto sub = extract_submesh(sample.mesh, dec.parts[seed % k]);
  ProblemSpec local = detail::local_spec(sub, sample.spec, u);
  if (eq == Equation::Heat) {
    local.dirichlet_steps.assign(sample.spec.n_steps + 1, {});
    for (std::size_t s = 0; s <= sample.spec.n_steps; ++s)
      for (Index i = 0; i < sub.num_vertices(); ++i) {
        if (sub.roles[i] == VertexRole::GlobalDirichlet)
          local.dirichlet_steps[s][i] = sample.spec.dirichlet_steps[s].at(sub.global_ids[i]);
        else if (sub.roles[i] == VertexRole::Artificial)
          local.dirichlet_steps[s][i] = unit(rng);
      }
    local.dirichlet = local.dirichlet_steps.front();
  }
  return {sub.mesh, local};
}

inline TransformRecord random_transform(Equation eq, TransformKind kind, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  TransformRecord r;
  r.equation = eq;
  switch (kind) {
    case TransformKind::SpatialShift: r.spatial_shift = {4 * unit(rng) - 2, 4 * unit(rng) - 2}; break;
    case TransformKind::SpatialRotation: r.spatial_rotation = 2 * std::numbers::pi * unit(rng); break;
    case TransformKind::SpatialScaling: r.spatial_scale = 0.25 + 3.75 * unit(rng); break;
    case TransformKind::ValueShift: r.value_shift = 20 * unit(rng) - 10; break;
    case TransformKind::ValueScaling: r.value_scale = (unit(rng) < 0.5 ? -1 : 1) * (0.1 + 9.9 * unit(rng)); break;
  }
  return r;
}

inline CriterionResult symmetry_suite(std::ostream* log = nullptr) {
  const auto t0 = std::chrono::steady_clock::now();
  constexpr std::size_t kProblems = 10;
  const Equation eqs[] = {Equation::LaplaceDirichlet, Equation::LaplaceMixed, Equation::Darcy, Equation::Heat,
                          Equation::NonlinearLaplace};
  bool ok = true;
  std::size_t pairs = 0;
  double worst_sym = 0.0, worst_rt = 0.0;
  std::ostringstream fails;
  for (Equation eq : eqs) {
    for (TransformKind kind : admitted_transforms(eq)) {
      ++pairs;
      std::mt19937_64 rng(static_cast<std::uint64_t>(eq) * 100 + static_cast<std::uint64_t>(kind));
      double worst = 0.0;
      for (std::size_t i = 0; i < kProblems; ++i) {
        const auto [mesh, spec] = random_local_problem(eq, 500 + 17 * i + static_cast<std::uint64_t>(eq));
        const auto rec = random_transform(eq, kind, rng);
        const Field base = solve_direct(mesh, spec);
        const auto [tmesh, tspec] = apply_forward(rec, mesh, spec);
        const Field lhs = solve_direct(tmesh, tspec);
        const Field rhs = transform_solution(rec, base);
        worst = std::max(worst, l2_relative_error(lhs, rhs));
      }
      worst_sym = std::max(worst_sym, worst);
      if (!(worst <= kSymmetryTol)) {
        ok = false;
        fails << " [" << to_string(eq) << "/" << to_string(kind) << " " << worst << "]";
      }
      if (log) *log << "  " << to_string(eq) << " " << to_string(kind) << " worst=" << worst << '\n';
    }
    // Value transforms outside the group must be rejected.
    if (!admits_value_transform(eq)) {
      TransformRecord bad;
      bad.equation = eq;
      bad.value_shift = 1.0;
      bool rejected = false;
      try {
        const auto [mesh, spec] = random_local_problem(eq, 77);
        (void)apply_forward(bad, mesh, spec);
      } catch (const TransformError&) {
        rejected = true;
      }
      if (!rejected) {
        ok = false;
        fails << " [" << to_string(eq) << " accepted a value shift]";
      }
    }
    // Normalize / denormalize round trips on data pushed out of range.
    for (std::size_t i = 0; i < kProblems; ++i) {
      auto [mesh, spec] = random_local_problem(eq, 900 + 13 * i);
      // NonlinearLaplace cannot be rescaled, so it only gets moved.
      const double grow = eq == Equation::NonlinearLaplace ? 1.0 : 3.0;
      for (auto& p : mesh.vertices) p = grow * p + Point2{5.0, -2.0};
      if (admits_value_transform(eq)) {
        for (auto& [v, val] : spec.dirichlet) val = 10.0 + 4.0 * val;
        for (auto& m : spec.dirichlet_steps)
          for (auto& [v, val] : m) val = 10.0 + 4.0 * val;
        for (double& u0 : spec.initial_u) u0 = 10.0 + 4.0 * u0;
      }
      SubMesh sub;
      sub.mesh = mesh;
      const auto rec = fit_normalizer(sub, spec, Box2{}, Interval{});
      const auto [nmesh, nspec] = apply_forward(rec, mesh, spec);
      const Box2 bb = nmesh.bbox();
      if (!(Box2{}.contains(bb.lo, 1e-12) && Box2{}.contains(bb.hi, 1e-12))) {
        ok = false;
        fails << " [" << to_string(eq) << " normalized mesh outside the training box]";
      }
      if (eq == Equation::LaplaceDirichlet || eq == Equation::LaplaceMixed || eq == Equation::Heat) {
        const auto [lo, hi] = detail::dirichlet_range(nspec);
        if (lo < -1e-12 || hi > 1.0 + 1e-12) {
          ok = false;
          fails << " [" << to_string(eq) << " normalized data outside the training range]";
        }
      }
      const Field w = solve_direct(mesh, spec);
      const Field back = apply_inverse(rec, solve_direct(nmesh, nspec));
      const Field vals = apply_inverse(rec, transform_solution(rec, w));
      const double rt = std::max(l2_relative_error(back, w), l2_relative_error(vals, w));
      worst_rt = std::max(worst_rt, rt);
      if (!(rt <= kRoundTripTol)) {
        ok = false;
        fails << " [" << to_string(eq) << " round trip " << rt << "]";
      }
    }
  }
  std::ostringstream d;
  d << pairs << " (equation, transform) pairs x " << kProblems << " problems; worst solve/transform mismatch "
    << worst_sym << " (limit " << kSymmetryTol << "), worst round trip " << worst_rt << " (limit " << kRoundTripTol
    << ")" << fails.str();
  return {5, "symmetry suite", ok, d.str(), seconds_since(t0)};
}

// ---------------------------------------------------------------------------
// 6: ablation trends
// ---------------------------------------------------------------------------

inline CriterionResult ablation_trends(std::size_t threads = 1, std::ostream* log = nullptr) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto prob = random_test_problem(Equation::LaplaceDirichlet, 6001);
  const Field exact = solve_direct(prob.mesh, prob.spec);
  std::ostringstream d;
  d << "n=" << prob.mesh.num_vertices() << ";";

  std::vector<std::size_t> iters;
  bool reached = true;
  for (double tau : {0.01, 0.02, 0.04}) {
    SniConfig cfg(20, 2, tau, 1e-14, 20000);
    cfg.threads = threads;
    cfg.oracle = exact;
    cfg.oracle_stop = kOracleTarget;
    const auto r = sni_run(cfg, prob.mesh, prob.spec);
    reached = reached && r.diagnostics.stop_reason == "oracle_target";
    iters.push_back(r.diagnostics.iterations);
    d << " tau=" << tau << ": " << r.diagnostics.iterations << " iterations;";
    if (log) *log << "  tau=" << tau << " iterations=" << r.diagnostics.iterations << '\n';
  }
  const bool monotone = reached && iters[0] >= iters[1] && iters[1] >= iters[2];

  std::vector<double> finals;
  for (std::size_t depth : {1u, 2u, 4u}) {
    SniConfig cfg(20, depth, 0.04, 1e-10, 20000);
    cfg.threads = threads;
    const auto r = sni_run(cfg, prob.mesh, prob.spec);
    finals.push_back(l2_relative_error(r.u, exact));
    d << " d=" << depth << ": final error " << finals.back() << " after " << r.diagnostics.iterations
      << " iterations;";
    if (log) *log << "  d=" << depth << " error=" << finals.back() << '\n';
  }
  const double spread = *std::max_element(finals.begin(), finals.end()) - *std::min_element(finals.begin(), finals.end());
  const double secs = seconds_since(t0);
  d << " depth spread " << spread << " (limit " << kDepthSpread << "), " << secs << "s";
  return {6, "ablation trends", monotone && spread < kDepthSpread && secs <= kAblationTimeLimit, d.str(), secs};
}

// ---------------------------------------------------------------------------
// 7: space-time heat
// ---------------------------------------------------------------------------

inline CriterionResult heat_spacetime(std::size_t threads = 1) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto mesh = random_test_mesh(7001);
  // Test-style data: alpha = 1, boundary constant in time.
  auto sample = sample_boundary(Equation::Heat, mesh, 7001);
  ProblemSpec spec = sample.spec;
  spec.alpha = 1.0;
  spec.dt = 0.01;
  spec.n_steps = 16;
  spec.dirichlet_steps.clear();
  const Field exact = solve_direct(mesh, spec);
  SniConfig cfg(16, 2, 0.8 / 16, 1e-10, 5000);
  cfg.threads = threads;
  const auto r = sni_run_spacetime(cfg, mesh, spec, 4, 4, 1);
  const double err = l2_relative_error(r.u, exact);
  std::ostringstream d;
  d << "n=" << mesh.num_vertices() << " steps=16, 4x4 parts, delta_T=1: error " << err << " after "
    << r.diagnostics.iterations << " iterations (limit " << kHeatTol << "), converged=" << r.diagnostics.converged;
  return {7, "space-time heat", err <= kHeatTol, d.str(), seconds_since(t0)};
}

// ---------------------------------------------------------------------------
// 8: nonlinear Laplace
// ---------------------------------------------------------------------------

inline CriterionResult nonlinear_laplace(std::size_t threads = 1, std::ostream* log = nullptr) {
  const auto t0 = std::chrono::steady_clock::now();
  bool ok = true;
  std::ostringstream d;
  for (std::size_t m = 0; m < 3; ++m) {
    const auto prob = random_test_problem(Equation::NonlinearLaplace, 8001 + 31 * m);
    const Field exact = solve_direct(prob.mesh, prob.spec);
    SniConfig cfg(20, 2, 0.04, 1e-9, 5000);
    cfg.threads = threads;
    const auto r = sni_run(cfg, prob.mesh, prob.spec);
    const double err = l2_relative_error(r.u, exact);
    ok = ok && err <= kNonlinearTol;
    d << " mesh " << m << " (n=" << prob.mesh.num_vertices() << "): error " << err << " after "
      << r.diagnostics.iterations << " iterations;";
    if (log) *log << "  mesh " << m << " error=" << err << '\n';
  }
  d << " limit " << kNonlinearTol;
  return {8, "nonlinear Laplace", ok, d.str(), seconds_since(t0)};
}

// ---------------------------------------------------------------------------
// 9: datagen reproducibility and ranges
// ---------------------------------------------------------------------------

inline CriterionResult datagen_reproducibility(std::size_t threads = 1) {
  const auto t0 = std::chrono::steady_clock::now();
  namespace fs = std::filesystem;
  std::mt19937_64 tag(static_cast<std::uint64_t>(std::chrono::steady_clock::now().time_since_epoch().count()));
  const fs::path root = fs::temp_directory_path() / ("sni_datagen_" + std::to_string(tag()));
  DatasetParams p;
  p.equation = Equation::LaplaceDirichlet;
  p.n_shapes = 2;
  p.samples_per_shape = 2;
  p.seed = 42;
  p.threads = threads;
  const auto m1 = generate_dataset(p, (root / "a").string());
  const auto m2 = generate_dataset(p, (root / "b").string());
  p.seed = 43;
  const auto m3 = generate_dataset(p, (root / "c").string());
  std::error_code ec;
  fs::remove_all(root, ec);
  const bool same = m1.sha256 == m2.sha256 && m1.count == 4;
  const bool differs = m3.sha256 != m1.sha256;

  std::size_t in_range = 0, total = 0;
  std::string first_violation;
  const Equation eqs[] = {Equation::LaplaceDirichlet, Equation::LaplaceMixed, Equation::Darcy, Equation::Heat,
                          Equation::NonlinearLaplace};
  std::vector<TriMesh> shapes;
  for (std::uint64_t s = 0; s < 10; ++s) shapes.push_back(triangulate(random_simple_polygon(3, 12, Box2{}, 900 + s), 0.1));
  for (std::size_t i = 0; i < 1000; ++i) {
    const Equation eq = eqs[i % 5];
    const auto sample = sample_boundary(eq, shapes[i % shapes.size()], 10000 + i);
    const auto why = check_sample_ranges(sample);
    ++total;
    if (why.empty())
      ++in_range;
    else if (first_violation.empty())
      first_violation = std::string(to_string(eq)) + ": " + why;
  }
  std::ostringstream d;
  d << "manifest hashes " << (same ? "identical" : "DIFFER") << " for equal seeds (" << m1.sha256.substr(0, 12)
    << "), " << (differs ? "distinct" : "IDENTICAL") << " for a different seed; " << in_range << "/" << total
    << " samples within ranges" << (first_violation.empty() ? "" : " first violation: " + first_violation);
  return {9, "datagen reproducibility", same && differs && in_range == total, d.str(), seconds_since(t0)};
}

// ---------------------------------------------------------------------------

inline std::vector<int> suite_criteria(const std::string& suite) {
  if (suite == "oracle") return {1, 2, 4, 7, 8, 9};
  if (suite == "theorem1") return {3};
  if (suite == "symmetry") return {5};
  if (suite == "ablation") return {6};
  if (suite == "all") return {1, 2, 3, 4, 5, 6, 7, 8, 9};
  throw ConfigError("unknown suite '" + suite + "' (oracle|theorem1|symmetry|ablation|all)");
}

/// Runs the requested criteria in id order; `on_result` sees each as it
/// finishes.
inline std::vector<CriterionResult> run_criteria(const std::vector<int>& ids, std::size_t threads,
                                                 const std::function<void(const CriterionResult&)>& on_result = {},
                                                 std::ostream* log = nullptr) {
  std::vector<CriterionResult> out;
  auto want = [&](int id) { return std::find(ids.begin(), ids.end(), id) != ids.end(); };
  auto emit = [&](CriterionResult r) {
    if (on_result) on_result(r);
    out.push_back(std::move(r));
  };
  auto guarded = [&](int id, const char* name, auto&& fn) {
    try {
      fn();
    } catch (const std::exception& e) {
      emit({id, name, false, std::string("exception: ") + e.what(), 0.0});
    }
  };
  if (want(1) || want(2))
    guarded(1, "oracle equivalence", [&] {
      for (auto& r : oracle_and_contraction(threads, log))
        if (want(r.id)) emit(r);
    });
  if (want(3)) guarded(3, "theorem-1 error bound", [&] { emit(theorem1_bound(threads, log)); });
  if (want(4)) guarded(4, "step-size guard", [&] { emit(config_guard()); });
  if (want(5)) guarded(5, "symmetry suite", [&] { emit(symmetry_suite(log)); });
  if (want(6)) guarded(6, "ablation trends", [&] { emit(ablation_trends(threads, log)); });
  if (want(7)) guarded(7, "space-time heat", [&] { emit(heat_spacetime(threads)); });
  if (want(8)) guarded(8, "nonlinear Laplace", [&] { emit(nonlinear_laplace(threads, log)); });
  if (want(9)) guarded(9, "datagen reproducibility", [&] { emit(datagen_reproducibility(threads)); });
  return out;
}

inline std::string format_line(const CriterionResult& r) {
  std::ostringstream os;
  os << "[" << (r.passed ? "PASS" : "FAIL") << "] criterion " << r.id << " (" << r.name << "): " << r.detail;
  return os.str();
}

}  // namespace sni::verify

#endif  // SNI_VERIFY_HPP
