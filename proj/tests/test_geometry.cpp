#include <gtest/gtest.h>

#include <set>

#include "test_util.hpp"

using namespace sni;

namespace {

double shoelace(const std::vector<Point2>& p) {
  double a = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const auto& q = p[i];
    const auto& r = p[(i + 1) % p.size()];
    a += q.x * r.y - r.x * q.y;
  }
  return 0.5 * a;
}

}  // namespace

TEST(Polygon, RandomPolygonIsSimpleAndInsideBox) {
  const Box2 box;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto poly = random_simple_polygon(3, 12, box, seed);
    EXPECT_GE(poly.size(), 3u);
    EXPECT_LE(poly.size(), 12u);
    EXPECT_TRUE(is_simple(poly)) << "seed " << seed;
    for (const auto& p : poly.vertices) EXPECT_TRUE(box.contains(p));
  }
}

TEST(Polygon, SameSeedSamePolygon) {
  const auto a = random_simple_polygon(3, 12, Box2{}, 17);
  const auto b = random_simple_polygon(3, 12, Box2{}, 17);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a.vertices[i].x, b.vertices[i].x);
    EXPECT_EQ(a.vertices[i].y, b.vertices[i].y);
  }
}

TEST(Polygon, RejectsBadCounts) {
  EXPECT_THROW(random_simple_polygon(2, 5, Box2{}, 0), GenerationError);
  EXPECT_THROW(random_simple_polygon(6, 5, Box2{}, 0), GenerationError);
}

TEST(Polygon, CrossingSquareIsNotSimple) {
  Polygon bow{{{0, 0}, {1, 1}, {1, 0}, {0, 1}}};
  EXPECT_FALSE(is_simple(bow));
  Polygon square{{{0, 0}, {1, 0}, {1, 1}, {0, 1}}};
  EXPECT_TRUE(is_simple(square));
}

TEST(Triangulate, AreaMatchesShoelace) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto poly = random_simple_polygon(3, 12, Box2{}, seed);
    const auto mesh = triangulate(poly, 0.08);
    EXPECT_NEAR(mesh.area(), std::abs(shoelace(poly.vertices)), 1e-12) << "seed " << seed;
  }
}

TEST(Triangulate, EulerCharacteristicOfDisk) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto mesh = triangulate(random_simple_polygon(3, 12, Box2{}, seed), 0.08);
    const long v = static_cast<long>(mesh.num_vertices());
    const long e = static_cast<long>(mesh.edges().size());
    const long f = static_cast<long>(mesh.num_triangles());
    EXPECT_EQ(v - e + f, 1) << "seed " << seed;
  }
}

TEST(Triangulate, ValidAndRespectsEdgeBound) {
  const double target = 0.05;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto mesh = triangulate(random_simple_polygon(3, 12, Box2{}, seed), target);
    EXPECT_NO_THROW(mesh.validate());
    EXPECT_LE(mesh.max_edge_length(), 1.5 * target + 1e-12);
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) EXPECT_GT(mesh.triangle_area(t), 0.0);
  }
}

TEST(Triangulate, BoundaryEdgesCarryPolygonSegments) {
  const auto poly = random_simple_polygon(5, 5, Box2{}, 4);
  const auto mesh = triangulate(poly, 0.1);
  std::set<int> segs;
  for (const auto& be : mesh.boundary_edges) {
    EXPECT_EQ(be.tag.kind, BoundaryKind::Dirichlet);
    segs.insert(be.tag.segment);
  }
  EXPECT_EQ(segs, (std::set<int>{0, 1, 2, 3, 4}));
}

TEST(Triangulate, RejectsDegenerateInput) {
  EXPECT_THROW(triangulate(Polygon{{{0, 0}, {1, 0}, {2, 0}}}, 0.1), MeshingError);
  EXPECT_THROW(triangulate(Polygon{{{0, 0}, {1, 0}, {0, 1}}}, 0.0), MeshingError);
}

TEST(Mesh, GridCounts) {
  const auto m = make_grid_mesh(4, 3);
  EXPECT_EQ(m.num_vertices(), 20u);
  EXPECT_EQ(m.num_triangles(), 24u);
  EXPECT_EQ(m.boundary_edges.size(), 14u);
  EXPECT_NEAR(m.area(), 1.0, 1e-14);
  EXPECT_NO_THROW(m.validate());
}

TEST(Mesh, RefineQuadruplesTrianglesAndKeepsArea) {
  const auto m = make_grid_mesh(3, 3);
  const auto r = refine_uniform(m, 2);
  EXPECT_EQ(r.num_triangles(), 16 * m.num_triangles());
  EXPECT_EQ(r.boundary_edges.size(), 4 * m.boundary_edges.size());
  EXPECT_NEAR(r.area(), m.area(), 1e-14);
  EXPECT_NO_THROW(r.validate());
}

TEST(Mesh, ValidateCatchesFlippedTriangle) {
  auto m = make_grid_mesh(2, 2);
  std::swap(m.triangles[0][1], m.triangles[0][2]);
  EXPECT_THROW(m.validate(), MeshError);
}

TEST(Mesh, ValidateCatchesMissingBoundaryEdge) {
  auto m = make_grid_mesh(2, 2);
  m.boundary_edges.pop_back();
  EXPECT_THROW(m.validate(), MeshError);
}

TEST(Mesh, RetagBySegment) {
  const auto m = retag_boundary(make_grid_mesh(2, 2), {BoundaryKind::Neumann, BoundaryKind::Dirichlet});
  for (const auto& be : m.boundary_edges)
    EXPECT_EQ(be.tag.kind, be.tag.segment == 0 ? BoundaryKind::Neumann : BoundaryKind::Dirichlet);
}

TEST(Submesh, FullVertexSetRoundTrips) {
  const auto mesh = triangulate(random_simple_polygon(3, 12, Box2{}, 5), 0.1);
  std::vector<Index> all(mesh.num_vertices());
  for (Index i = 0; i < all.size(); ++i) all[i] = i;
  const auto sub = extract_submesh(mesh, all);
  ASSERT_EQ(sub.mesh.num_triangles(), mesh.num_triangles());
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t)
    for (int c = 0; c < 3; ++c) EXPECT_EQ(sub.global_ids[sub.mesh.triangles[t][c]], mesh.triangles[t][c]);
  EXPECT_TRUE(sub.artificial_boundary.empty());
  for (const auto& be : sub.mesh.boundary_edges) EXPECT_NE(be.tag.kind, BoundaryKind::Artificial);
}

TEST(Submesh, LeftHalfOfGrid) {
  // 4x4 cells; keep columns x <= 0.5. The cut line x = 0.5 becomes artificial.
  const auto mesh = make_grid_mesh(4, 4);
  std::vector<Index> left;
  for (Index i = 0; i < mesh.num_vertices(); ++i)
    if (mesh.vertices[i].x <= 0.5 + 1e-12) left.push_back(i);
  const auto sub = extract_submesh(mesh, left);
  EXPECT_EQ(sub.num_vertices(), 15u);
  EXPECT_EQ(sub.mesh.num_triangles(), 16u);
  EXPECT_NO_THROW(sub.mesh.validate());
  for (Index l = 0; l < sub.num_vertices(); ++l) {
    const Point2 p = sub.mesh.vertices[l];
    const bool outer = p.x < 1e-12 || p.y < 1e-12 || p.y > 1 - 1e-12;
    const bool cut = std::abs(p.x - 0.5) < 1e-12;
    if (outer)
      EXPECT_EQ(sub.roles[l], VertexRole::GlobalDirichlet);
    else if (cut)
      EXPECT_EQ(sub.roles[l], VertexRole::Artificial);
    else
      EXPECT_EQ(sub.roles[l], VertexRole::Interior);
  }
  EXPECT_EQ(sub.artificial_boundary.size(), 3u);
}

TEST(Submesh, NeumannEdgesKeepTheirRole) {
  const auto mesh = retag_boundary(make_grid_mesh(4, 4), {BoundaryKind::Neumann});
  std::vector<Index> bottom;
  for (Index i = 0; i < mesh.num_vertices(); ++i)
    if (mesh.vertices[i].y <= 0.25 + 1e-12) bottom.push_back(i);
  const auto sub = extract_submesh(mesh, bottom);
  std::size_t neumann = 0;
  for (Index l = 0; l < sub.num_vertices(); ++l)
    if (sub.roles[l] == VertexRole::GlobalNeumann) ++neumann;
  // Bottom row minus its two corners, which belong to Dirichlet sides.
  EXPECT_EQ(neumann, 3u);
}

TEST(Submesh, EmptyInductionThrows) {
  const auto mesh = make_grid_mesh(2, 2);
  const std::vector<Index> two{0, 1};
  EXPECT_THROW(extract_submesh(mesh, two), MeshError);
}
