#include <gtest/gtest.h>

#include <numbers>

#include "test_util.hpp"

using namespace sni;
using sni::testing::dirichlet_from;
using sni::testing::sample;

namespace {

std::pair<TriMesh, ProblemSpec> laplace_problem(Equation eq) {
  auto mesh = triangulate(random_simple_polygon(3, 10, Box2{}, 21), 0.1);
  if (eq == Equation::LaplaceMixed) mesh = retag_boundary(std::move(mesh), {BoundaryKind::Neumann});
  ProblemSpec spec;
  spec.equation = eq;
  for (const auto& be : mesh.boundary_edges)
    for (Index v : be.v) {
      const Point2 p = mesh.vertices[v];
      if (be.tag.kind == BoundaryKind::Neumann)
        spec.neumann[v] = std::cos(5 * p.y);
      else
        spec.dirichlet[v] = p.x * p.x - p.y + 0.2;
    }
  if (eq == Equation::Darcy) {
    spec.coeff_a = sample(mesh, [](Point2 p) { return 1.0 + 0.5 * std::sin(3 * p.x); });
    spec.source_f = sample(mesh, [](Point2 p) { return 1.0 + p.y; });
  }
  if (eq == Equation::Heat) {
    spec.initial_u = sample(mesh, [](Point2 p) { return p.x + 0.5; });
    spec.dt = 0.01;
    spec.n_steps = 3;
  }
  return {mesh, spec};
}

void expect_commutes(const TransformRecord& r, const TriMesh& mesh, const ProblemSpec& spec) {
  const Field base = solve_direct(mesh, spec);
  const auto [tm, ts] = apply_forward(r, mesh, spec);
  const Field lhs = solve_direct(tm, ts);
  EXPECT_LT(l2_relative_error(lhs, transform_solution(r, base)), 1e-8);
  EXPECT_LT(l2_relative_error(apply_inverse(r, lhs), base), 1e-8);
}

}  // namespace

TEST(Transform, LaplaceDirichletScalingKeepsValues) {
  auto [mesh, spec] = laplace_problem(Equation::LaplaceDirichlet);
  TransformRecord r;
  r.spatial_scale = 0.8;
  const auto [tm, ts] = apply_forward(r, mesh, spec);
  for (Index i = 0; i < mesh.num_vertices(); ++i) {
    EXPECT_DOUBLE_EQ(tm.vertices[i].x, 0.8 * mesh.vertices[i].x);
    EXPECT_DOUBLE_EQ(tm.vertices[i].y, 0.8 * mesh.vertices[i].y);
  }
  EXPECT_EQ(ts.dirichlet, spec.dirichlet);
  expect_commutes(r, mesh, spec);
}

TEST(Transform, RotationAndShiftCommuteForEveryEquation) {
  for (Equation eq : {Equation::LaplaceDirichlet, Equation::LaplaceMixed, Equation::Darcy, Equation::Heat,
                      Equation::NonlinearLaplace}) {
    auto [mesh, spec] = laplace_problem(eq);
    TransformRecord r;
    r.equation = eq;
    r.spatial_shift = {0.3, -1.2};
    r.spatial_rotation = 2.0;
    SCOPED_TRACE(to_string(eq));
    expect_commutes(r, mesh, spec);
  }
}

TEST(Transform, MixedScalingMultipliesSolution) {
  auto [mesh, spec] = laplace_problem(Equation::LaplaceMixed);
  TransformRecord r;
  r.equation = Equation::LaplaceMixed;
  r.spatial_scale = 2.5;
  EXPECT_DOUBLE_EQ(r.solution_factor(), 2.5);
  expect_commutes(r, mesh, spec);
}

TEST(Transform, DarcyScalingMultipliesBySquare) {
  auto [mesh, spec] = laplace_problem(Equation::Darcy);
  TransformRecord r;
  r.equation = Equation::Darcy;
  r.spatial_scale = 0.5;
  EXPECT_DOUBLE_EQ(r.solution_factor(), 0.25);
  expect_commutes(r, mesh, spec);
}

TEST(Transform, ValueMapsForLinearEquations) {
  for (Equation eq : {Equation::LaplaceDirichlet, Equation::LaplaceMixed, Equation::Darcy, Equation::Heat}) {
    auto [mesh, spec] = laplace_problem(eq);
    TransformRecord r;
    r.equation = eq;
    r.value_scale = -3.0;
    r.value_shift = 0.7;
    r.spatial_scale = 1.7;
    SCOPED_TRACE(to_string(eq));
    expect_commutes(r, mesh, spec);
  }
}

TEST(Transform, HeatScalesDiffusivity) {
  auto [mesh, spec] = laplace_problem(Equation::Heat);
  TransformRecord r;
  r.equation = Equation::Heat;
  r.spatial_scale = 3.0;
  const auto [tm, ts] = apply_forward(r, mesh, spec);
  EXPECT_DOUBLE_EQ(ts.alpha, 9.0 * spec.alpha);
}

TEST(Transform, NonlinearRejectsValueMaps) {
  auto [mesh, spec] = laplace_problem(Equation::NonlinearLaplace);
  TransformRecord r;
  r.equation = Equation::NonlinearLaplace;
  r.value_shift = 0.1;
  EXPECT_THROW(apply_forward(r, mesh, spec), TransformError);
  r.value_shift = 0.0;
  r.value_scale = 2.0;
  EXPECT_THROW(apply_forward(r, mesh, spec), TransformError);
}

TEST(Transform, InvalidRecordsRejected) {
  auto [mesh, spec] = laplace_problem(Equation::LaplaceDirichlet);
  TransformRecord r;
  r.spatial_scale = 0.0;
  EXPECT_THROW(apply_forward(r, mesh, spec), TransformError);
  r.spatial_scale = 1.0;
  r.value_scale = 0.0;
  EXPECT_THROW(apply_forward(r, mesh, spec), TransformError);
  TransformRecord wrong;
  wrong.equation = Equation::Darcy;
  EXPECT_THROW(apply_forward(wrong, mesh, spec), TransformError);
}

TEST(Transform, IdentityIsExact) {
  auto [mesh, spec] = laplace_problem(Equation::LaplaceDirichlet);
  const auto [tm, ts] = apply_forward(TransformRecord{}, mesh, spec);
  EXPECT_EQ(tm.vertices.size(), mesh.vertices.size());
  for (Index i = 0; i < mesh.num_vertices(); ++i) EXPECT_EQ(tm.vertices[i], mesh.vertices[i]);
  EXPECT_EQ(ts.dirichlet, spec.dirichlet);
}

TEST(Transform, ValueRoundTrip) {
  TransformRecord r;
  r.equation = Equation::Darcy;
  r.spatial_scale = 0.3;
  r.value_scale = -2.0;
  r.value_shift = 5.0;
  for (double u : {-3.0, 0.0, 0.25, 11.0}) EXPECT_NEAR(r.inverse_value(r.forward_value(u)), u, 1e-12);
  // Hand computation: -2 * (0.09 * 1 + 5).
  EXPECT_NEAR(r.forward_value(1.0), -10.18, 1e-12);
}

TEST(Normalizer, InsideBoxAndRangeIsIdentity) {
  const auto mesh = triangulate(random_simple_polygon(3, 10, Box2{}, 4), 0.1);
  SubMesh sub;
  sub.mesh = mesh;
  const auto spec = dirichlet_from(mesh, Equation::LaplaceDirichlet, [](Point2 p) { return 0.5 + 0.4 * p.x; });
  EXPECT_TRUE(fit_normalizer(sub, spec, Box2{}, Interval{}).is_identity());
}

TEST(Normalizer, MapsLargeDomainAndDataIntoTrainingRanges) {
  auto mesh = triangulate(random_simple_polygon(3, 10, Box2{}, 4), 0.1);
  for (auto& p : mesh.vertices) p = 4.0 * p + Point2{10.0, 3.0};
  SubMesh sub;
  sub.mesh = mesh;
  const auto spec = dirichlet_from(mesh, Equation::LaplaceDirichlet, [](Point2 p) { return 3.0 * p.x - 20.0; });
  const auto r = fit_normalizer(sub, spec, Box2{}, Interval{});
  const auto [tm, ts] = apply_forward(r, mesh, spec);
  const Box2 bb = tm.bbox();
  EXPECT_TRUE(Box2{}.contains(bb.lo, 1e-12) && Box2{}.contains(bb.hi, 1e-12));
  for (const auto& [v, val] : ts.dirichlet) {
    EXPECT_GE(val, -1e-12);
    EXPECT_LE(val, 1.0 + 1e-12);
  }
  expect_commutes(r, mesh, spec);
}

TEST(Normalizer, SmallRangeIsShiftedNotStretched) {
  const auto mesh = triangulate(random_simple_polygon(3, 10, Box2{}, 4), 0.1);
  SubMesh sub;
  sub.mesh = mesh;
  const auto spec = dirichlet_from(mesh, Equation::LaplaceDirichlet, [](Point2 p) { return 7.0 + 0.1 * p.x; });
  const auto r = fit_normalizer(sub, spec, Box2{}, Interval{});
  EXPECT_DOUBLE_EQ(r.value_scale, 1.0);
  EXPECT_DOUBLE_EQ(r.spatial_scale, 1.0);
  const auto [lo, hi] = detail::dirichlet_range(apply_forward(r, mesh, spec).second);
  EXPECT_NEAR(lo, 0.0, 1e-12);
  EXPECT_LT(hi, 0.2);
}

TEST(Normalizer, NonlinearOnlyShifts) {
  std::vector<std::string> warnings;
  auto saved = warning_sink();
  warning_sink() = [&](const std::string& m) { warnings.push_back(m); };
  auto mesh = triangulate(random_simple_polygon(3, 10, Box2{}, 4), 0.1);
  for (auto& p : mesh.vertices) p = 3.0 * p + Point2{2.0, 0.0};
  SubMesh sub;
  sub.mesh = mesh;
  const auto spec = dirichlet_from(mesh, Equation::NonlinearLaplace, [](Point2) { return 4.0; });
  const auto r = fit_normalizer(sub, spec, Box2{}, Interval{});
  warning_sink() = saved;
  EXPECT_DOUBLE_EQ(r.spatial_scale, 1.0);
  EXPECT_DOUBLE_EQ(r.value_scale, 1.0);
  EXPECT_DOUBLE_EQ(r.value_shift, 0.0);
  EXPECT_EQ(warnings.size(), 2u);
  expect_commutes(r, mesh, spec);
}
