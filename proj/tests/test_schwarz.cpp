#include <gtest/gtest.h>

#include <atomic>
#include <cmath>

#include "test_util.hpp"

using namespace sni;
using sni::testing::dirichlet_from;
using sni::testing::sample;

namespace {

struct Problem {
  TriMesh mesh;
  ProblemSpec spec;
};

Problem polygon_laplace(std::uint64_t seed, double target = 0.07) {
  Problem p;
  p.mesh = triangulate(random_simple_polygon(3, 12, Box2{}, seed), target);
  p.spec = dirichlet_from(p.mesh, Equation::LaplaceDirichlet,
                          [](Point2 x) { return std::sin(4 * x.x) + x.y * x.y; });
  return p;
}

}  // namespace

TEST(Config, StepSizeGuard) {
  EXPECT_THROW(SniConfig(4, 2, 0.25), ConfigError);
  EXPECT_THROW(SniConfig(4, 2, 0.3), ConfigError);
  EXPECT_THROW(SniConfig(4, 2, 0.0), ConfigError);
  EXPECT_THROW(SniConfig(4, 2, -0.1), ConfigError);
  EXPECT_THROW(SniConfig(0, 2, 0.1), ConfigError);
  EXPECT_THROW(SniConfig(4, 2, 0.1, 0.0), ConfigError);
  EXPECT_THROW(SniConfig(4, 2, 0.1, 1e-8, 0), ConfigError);
  EXPECT_NO_THROW(SniConfig(4, 2, 0.2499));
  EXPECT_NO_THROW(SniConfig(20, 2, 0.04));
}

TEST(Config, LocalSolverParsing) {
  EXPECT_EQ(LocalSolverSpec::parse("exact").kind, LocalSolverKind::Exact);
  const auto p = LocalSolverSpec::parse("perturbed:0.01:42");
  EXPECT_EQ(p.kind, LocalSolverKind::Perturbed);
  EXPECT_DOUBLE_EQ(p.c, 0.01);
  EXPECT_EQ(p.seed, 42u);
  const auto s = LocalSolverSpec::parse("surrogate:/tmp/w.json");
  EXPECT_EQ(s.kind, LocalSolverKind::Surrogate);
  EXPECT_EQ(s.weights_path, "/tmp/w.json");
  EXPECT_THROW(LocalSolverSpec::parse("perturbed:x:1"), ConfigError);
  EXPECT_THROW(LocalSolverSpec::parse("perturbed:0.1"), ConfigError);
  EXPECT_THROW(LocalSolverSpec::parse("magic"), ConfigError);
  EXPECT_THROW(LocalSolverSpec::parse("perturbed:-1:0"), ConfigError);
}

TEST(Rho, GeometricSequence) {
  std::vector<double> norms;
  for (int i = 0; i < 5; ++i) norms.push_back(std::pow(0.7, i));
  EXPECT_FALSE(estimate_rho(norms).has_value());
  norms.push_back(std::pow(0.7, 5));
  ASSERT_TRUE(estimate_rho(norms).has_value());
  EXPECT_NEAR(*estimate_rho(norms), 0.7, 1e-14);
  // Only the last five ratios count.
  norms.insert(norms.begin(), 1e6);
  EXPECT_NEAR(*estimate_rho(norms), 0.7, 1e-14);
}

TEST(Sni, SingleSubdomainIsDampedRichardson) {
  // K = 1: the local problem is the global one, so e^n = (1 - tau)^n e^0.
  const auto p = polygon_laplace(2);
  const Field exact = solve_direct(p.mesh, p.spec);
  const double tau = 0.3;
  SniConfig cfg(1, 0, tau, 1e-300, 12);
  cfg.threads = 1;
  cfg.oracle = exact;
  const auto r = sni_run(cfg, p.mesh, p.spec);
  Field u0(p.mesh.num_vertices(), 0.0);
  for (const auto& [v, val] : p.spec.dirichlet) u0[v] = val;
  const double e0 = l2_relative_error(u0, exact);
  ASSERT_EQ(r.diagnostics.errors.size(), 12u);
  for (std::size_t n = 0; n < 12; ++n)
    EXPECT_NEAR(r.diagnostics.errors[n], e0 * std::pow(1 - tau, static_cast<double>(n + 1)), 1e-8 * e0);
  ASSERT_TRUE(r.diagnostics.rho_hat.has_value());
  EXPECT_NEAR(*r.diagnostics.rho_hat, 1 - tau, 1e-6);
}

TEST(Sni, OneStepMatchesHandFormula) {
  const auto p = polygon_laplace(3);
  SniConfig cfg(4, 1, 0.2, 1e-8, 1);
  cfg.threads = 1;
  SniEngine engine(cfg, p.mesh, p.spec);
  SniState s = engine.initial_state();
  const Field u0 = s.u;
  engine.step(s);
  // Independent assembly of the update with the direct solver per subdomain.
  Field want = u0;
  for (std::size_t k = 0; k < 4; ++k) {
    const auto lp = engine.local_problem(k, u0);
    const Field w = solve_direct(lp.submesh.mesh, lp.spec);
    for (Index j = 0; j < w.size(); ++j) want[lp.submesh.global_ids[j]] += 0.2 * (w[j] - u0[lp.submesh.global_ids[j]]);
  }
  for (const auto& [v, val] : p.spec.dirichlet) want[v] = val;
  EXPECT_LT(sni::testing::max_abs_diff(s.u, want), 1e-9);
  EXPECT_NEAR(s.update_norms.back(), diff_norm2(want, u0), 1e-9);
}

TEST(Sni, ConvergesToDirectSolution) {
  const auto p = polygon_laplace(4);
  const Field exact = solve_direct(p.mesh, p.spec);
  SniConfig cfg(8, 2, 0.1, 1e-10, 5000);
  const auto r = sni_run(cfg, p.mesh, p.spec);
  EXPECT_TRUE(r.diagnostics.converged);
  EXPECT_EQ(r.diagnostics.stop_reason, "outer_tol");
  EXPECT_LT(l2_relative_error(r.u, exact), 1e-7);
  EXPECT_LT(*r.diagnostics.rho_hat, 1.0);
  EXPECT_EQ(r.diagnostics.subdomain_sizes.size(), 8u);
  EXPECT_GE(r.diagnostics.overlap_factor, 2u);
}

TEST(Sni, MixedAndDarcyConverge) {
  const auto mesh0 = triangulate(random_simple_polygon(4, 8, Box2{}, 7), 0.08);
  for (Equation eq : {Equation::LaplaceMixed, Equation::Darcy}) {
    auto sample_spec = sample_boundary(eq, mesh0, 99);
    const Field exact = solve_direct(sample_spec.mesh, sample_spec.spec);
    SniConfig cfg(4, 2, 0.2, 1e-10, 5000);
    const auto r = sni_run(cfg, sample_spec.mesh, sample_spec.spec);
    EXPECT_LT(l2_relative_error(r.u, exact), 1e-7) << to_string(eq);
  }
}

TEST(Sni, OracleStopReportsTarget) {
  const auto p = polygon_laplace(5);
  SniConfig cfg(4, 2, 0.2, 1e-14, 5000);
  cfg.oracle = solve_direct(p.mesh, p.spec);
  cfg.oracle_stop = 1e-4;
  const auto r = sni_run(cfg, p.mesh, p.spec);
  EXPECT_EQ(r.diagnostics.stop_reason, "oracle_target");
  EXPECT_LE(r.diagnostics.errors.back(), 1e-4);
  EXPECT_GT(r.diagnostics.errors[r.diagnostics.errors.size() - 2], 1e-4);
}

TEST(Sni, MaxOuterIsNotConvergence) {
  const auto p = polygon_laplace(5);
  SniConfig cfg(4, 2, 0.2, 1e-14, 3);
  const auto r = sni_run(cfg, p.mesh, p.spec);
  EXPECT_FALSE(r.diagnostics.converged);
  EXPECT_EQ(r.diagnostics.iterations, 3u);
  EXPECT_EQ(r.diagnostics.stop_reason, "max_outer");
}

TEST(Sni, ZeroOverlapLeavesVerticesFrozen) {
  const auto mesh = make_grid_mesh(8, 8);
  const auto spec = dirichlet_from(mesh, Equation::LaplaceDirichlet, [](Point2 p) { return p.x; });
  SniConfig cfg(4, 0, 0.2);
  EXPECT_THROW(sni_run(cfg, mesh, spec), ConsistencyError);
}

TEST(Sni, ThreadCountDoesNotChangeResult) {
  const auto p = polygon_laplace(6);
  SniConfig a(8, 2, 0.1, 1e-9, 300);
  a.threads = 1;
  SniConfig b = a;
  b.threads = 4;
  const auto ra = sni_run(a, p.mesh, p.spec), rb = sni_run(b, p.mesh, p.spec);
  EXPECT_EQ(ra.u, rb.u);
  EXPECT_EQ(ra.diagnostics.update_norms, rb.diagnostics.update_norms);
}

TEST(Sni, InitialGuessIsUsedAndLengthChecked) {
  const auto p = polygon_laplace(6);
  const Field exact = solve_direct(p.mesh, p.spec);
  SniConfig cfg(4, 2, 0.2, 1e-8, 50);
  cfg.initial_guess = exact;
  const auto r = sni_run(cfg, p.mesh, p.spec);
  EXPECT_LE(r.diagnostics.iterations, 2u);
  cfg.initial_guess = Field(3, 0.0);
  EXPECT_THROW(sni_run(cfg, p.mesh, p.spec), ConfigError);
}

TEST(Sni, HeatNeedsSpaceTimeEngine) {
  const auto mesh = make_grid_mesh(4, 4);
  auto spec = dirichlet_from(mesh, Equation::Heat, [](Point2) { return 0.0; });
  spec.initial_u.assign(mesh.num_vertices(), 0.0);
  spec.dt = 0.01;
  spec.n_steps = 2;
  EXPECT_THROW(sni_run(SniConfig(2, 1, 0.2), mesh, spec), SpecError);
}

TEST(Perturbed, ZeroLevelEqualsExact) {
  const auto p = polygon_laplace(7);
  SniConfig a(4, 2, 0.2, 1e-10, 400);
  SniConfig b = a;
  b.local_solver = LocalSolverSpec::perturbed(0.0, 3);
  const auto ra = sni_run(a, p.mesh, p.spec), rb = sni_run(b, p.mesh, p.spec);
  EXPECT_LT(diff_norm2(ra.u, rb.u), 1e-12);
  EXPECT_EQ(rb.diagnostics.c_abs_max, 0.0);
}

TEST(Perturbed, SeededAndBounded) {
  const auto p = polygon_laplace(7);
  const Field exact = solve_direct(p.mesh, p.spec);
  auto run = [&](std::uint64_t seed) {
    SniConfig c(4, 2, 0.2, 1e-300, 300);
    c.threads = 3;
    c.local_solver = LocalSolverSpec::perturbed(0.01, seed);
    return sni_run(c, p.mesh, p.spec);
  };
  const auto r1 = run(11), r2 = run(11), r3 = run(12);
  EXPECT_EQ(r1.u, r2.u);
  EXPECT_NE(r1.u, r3.u);
  EXPECT_GT(r1.diagnostics.c_abs_max, 0.0);
  const double err = diff_norm2(r1.u, exact);
  EXPECT_GT(err, 0.0);
  EXPECT_LT(err / norm2(exact), 0.05);
  for (const auto& [v, val] : p.spec.dirichlet) EXPECT_EQ(r1.u[v], val);
}

TEST(Perturbed, NoiseHasRequestedNorm) {
  const auto p = polygon_laplace(8);
  SniConfig cfg(4, 2, 0.2);
  SniEngine engine(cfg, p.mesh, p.spec);
  const auto state = engine.initial_state();
  const auto lp = engine.local_problem(1, state.u);
  ExactLocalSolver exact;
  const Field w = exact.solve(lp);
  PerturbedLocalSolver noisy(4, 0.05, 9);
  const auto [wn, injected] = noisy.solve(lp, 0);
  EXPECT_NEAR(diff_norm2(wn, w), 0.05 * norm2(w), 1e-12);
  EXPECT_NEAR(injected, 0.05 * norm2(w), 1e-12);
  for (Index i = 0; i < w.size(); ++i)
    if (lp.submesh.roles[i] == VertexRole::GlobalDirichlet) { EXPECT_EQ(wn[i], w[i]); }
}

TEST(Surrogate, MeanModelRecoversConstantSolution) {
  const auto mesh = make_grid_mesh(10, 10, Box2{});
  const auto spec = dirichlet_from(mesh, Equation::LaplaceDirichlet, [](Point2) { return 0.6; });
  SniConfig cfg(4, 2, 0.2, 1e-12, 3000);
  cfg.local_solver = LocalSolverSpec::surrogate(std::string(SNI_TEST_DATA) + "/mean_branch.json");
  const auto r = sni_run(cfg, mesh, spec);
  EXPECT_TRUE(r.diagnostics.converged);
  for (double v : r.u) EXPECT_NEAR(v, 0.6, 1e-9);
}

TEST(Surrogate, MissingWeightsIsConfigError) {
  const auto p = polygon_laplace(8);
  SniConfig cfg(4, 2, 0.2);
  cfg.local_solver = LocalSolverSpec::surrogate("/nonexistent/weights.json");
  EXPECT_THROW(sni_run(cfg, p.mesh, p.spec), ConfigError);
}

TEST(Surrogate, OutOfScopeFallsBackOrThrows) {
  const auto mesh0 = triangulate(random_simple_polygon(4, 8, Box2{}, 7), 0.08);
  const auto s = sample_boundary(Equation::Darcy, mesh0, 5);
  const Field exact = solve_direct(s.mesh, s.spec);
  SniConfig cfg(4, 2, 0.2, 1e-10, 5000);
  cfg.local_solver = LocalSolverSpec::surrogate(std::string(SNI_TEST_DATA) + "/mean_branch.json");
  const auto r = sni_run(cfg, s.mesh, s.spec);
  EXPECT_LT(l2_relative_error(r.u, exact), 1e-7);
  cfg.local_solver.fallback_exact = false;
  EXPECT_THROW(sni_run(cfg, s.mesh, s.spec), LocalSolveError);
}

TEST(Nonlinear, SniMatchesPicard) {
  const auto mesh = triangulate(random_simple_polygon(4, 8, Box2{}, 12), 0.1);
  const auto spec = dirichlet_from(mesh, Equation::NonlinearLaplace, [](Point2 p) { return 1.0 + p.x - p.y; });
  const Field exact = solve_direct(mesh, spec);
  SniConfig cfg(4, 2, 0.2, 1e-10, 3000);
  const auto r = sni_run(cfg, mesh, spec);
  EXPECT_LT(l2_relative_error(r.u, exact), 1e-7);
}

TEST(SpaceTime, Windows) {
  const auto w = time_windows(16, 4, 1);
  ASSERT_EQ(w.size(), 4u);
  const std::size_t want[4][2] = {{1, 5}, {4, 9}, {8, 13}, {12, 16}};
  for (int i = 0; i < 4; ++i) {
    EXPECT_EQ(w[i].first, want[i][0]);
    EXPECT_EQ(w[i].last, want[i][1]);
  }
  const auto none = time_windows(10, 2, 0);
  EXPECT_EQ(none[0].last, 5u);
  EXPECT_EQ(none[1].first, 6u);
  EXPECT_THROW(time_windows(10, 3, 1), ConfigError);
  EXPECT_THROW(time_windows(10, 0, 1), ConfigError);
}

TEST(SpaceTime, MatchesRollout) {
  const auto mesh = triangulate(random_simple_polygon(4, 8, Box2{}, 13), 0.1);
  auto spec = dirichlet_from(mesh, Equation::Heat, [](Point2 p) { return p.x + 0.5; });
  spec.initial_u = sample(mesh, [](Point2 p) { return std::cos(3 * p.y); });
  spec.dt = 0.01;
  spec.n_steps = 8;
  const Field exact = solve_direct(mesh, spec);
  SniConfig cfg(4, 2, 0.2, 1e-11, 4000);
  const auto r = sni_run_spacetime(cfg, mesh, spec, 2, 2, 1);
  EXPECT_TRUE(r.diagnostics.converged);
  EXPECT_LT(l2_relative_error(r.u, exact), 1e-7);
  for (Index i = 0; i < mesh.num_vertices(); ++i) EXPECT_EQ(r.u[i], spec.initial_u[i]);
}

TEST(SpaceTime, ConfigMismatchAndScope) {
  const auto mesh = make_grid_mesh(4, 4);
  auto spec = dirichlet_from(mesh, Equation::Heat, [](Point2) { return 0.0; });
  spec.initial_u.assign(mesh.num_vertices(), 0.0);
  spec.dt = 0.01;
  spec.n_steps = 4;
  EXPECT_THROW(sni_run_spacetime(SniConfig(3, 1, 0.2), mesh, spec, 2, 2, 1), ConfigError);
  SniConfig sur(4, 1, 0.2);
  sur.local_solver = LocalSolverSpec::surrogate("w.json");
  EXPECT_THROW(sni_run_spacetime(sur, mesh, spec, 2, 2, 1), ConfigError);
  auto lap = dirichlet_from(mesh, Equation::LaplaceDirichlet, [](Point2) { return 0.0; });
  EXPECT_THROW(sni_run_spacetime(SniConfig(4, 1, 0.2), mesh, lap, 2, 2, 1), SpecError);
}

TEST(Parallel, LowestFailingIndexWins) {
  std::atomic<int> ran{0};
  try {
    parallel_for(50, 4, [&](std::size_t i) {
      ++ran;
      if (i == 7 || i == 30) throw std::runtime_error("boom " + std::to_string(i));
    });
    FAIL();
  } catch (const std::runtime_error& e) {
    EXPECT_STREQ(e.what(), "boom 7");
  }
  EXPECT_EQ(ran.load(), 50);
}

TEST(Parallel, ThreadResolution) {
  EXPECT_EQ(resolve_threads(3), 3u);
  EXPECT_GE(resolve_threads(0), 1u);
}
