#include <gtest/gtest.h>

#include <set>

#include "test_util.hpp"

using namespace sni;

namespace {

std::size_t cut_size(const AdjGraph& g, const std::vector<std::vector<Index>>& parts) {
  std::vector<std::size_t> owner(g.n);
  for (std::size_t p = 0; p < parts.size(); ++p)
    for (Index v : parts[p]) owner[v] = p;
  std::size_t cut = 0;
  for (Index v = 0; v < g.n; ++v)
    for (Index u : g.neighbors[v])
      if (u > v && owner[u] != owner[v]) ++cut;
  return cut;
}

void expect_valid_partition(const AdjGraph& g, const std::vector<std::vector<Index>>& parts, std::size_t k) {
  ASSERT_EQ(parts.size(), k);
  std::vector<int> seen(g.n, 0);
  for (const auto& p : parts) {
    EXPECT_FALSE(p.empty());
    EXPECT_LE(static_cast<double>(p.size()), 1.5 * static_cast<double>(g.n) / static_cast<double>(k));
    EXPECT_TRUE(induces_connected(g, p));
    for (Index v : p) ++seen[v];
  }
  for (Index v = 0; v < g.n; ++v) EXPECT_EQ(seen[v], 1) << "vertex " << v;
}

// Brute-force BFS ball around a vertex set, computed by repeated relaxation.
std::set<Index> ball(const AdjGraph& g, const std::vector<Index>& seeds, std::size_t radius) {
  std::vector<std::size_t> dist(g.n, std::numeric_limits<std::size_t>::max());
  for (Index s : seeds) dist[s] = 0;
  for (std::size_t round = 0; round < g.n; ++round)
    for (Index v = 0; v < g.n; ++v)
      for (Index u : g.neighbors[v])
        if (dist[u] != std::numeric_limits<std::size_t>::max()) dist[v] = std::min(dist[v], dist[u] + 1);
  std::set<Index> out;
  for (Index v = 0; v < g.n; ++v)
    if (dist[v] <= radius) out.insert(v);
  return out;
}

}  // namespace

TEST(Adjacency, GridDegrees) {
  const auto g = build_adjacency(make_grid_mesh(3, 3));
  EXPECT_EQ(g.n, 16u);
  // 3x3 cells: 24 axis edges + 9 diagonals.
  EXPECT_EQ(g.num_edges(), 33u);
}

TEST(Partition, PathSplitIsOptimal) {
  // Brute force over all contiguous two-way splits of a path: the optimum
  // cuts one edge; the balance cap leaves sizes within 1.5 n / 2.
  const auto g = path_graph(12);
  const auto parts = partition(g, 2, 0);
  expect_valid_partition(g, parts, 2);
  std::size_t best = std::numeric_limits<std::size_t>::max();
  for (Index s = 1; s < 12; ++s) {
    std::vector<Index> a, b;
    for (Index v = 0; v < 12; ++v) (v < s ? a : b).push_back(v);
    if (a.size() > 9 || b.size() > 9) continue;
    best = std::min(best, cut_size(g, {a, b}));
  }
  EXPECT_EQ(cut_size(g, parts), best);
}

TEST(Partition, PathKWayIsContiguous) {
  const auto g = path_graph(40);
  const auto parts = partition(g, 5, 3);
  expect_valid_partition(g, parts, 5);
  EXPECT_EQ(cut_size(g, parts), 4u);
}

TEST(Partition, GridTwoWay) {
  const auto g = build_adjacency(make_grid_mesh(4, 4));
  const auto parts = partition(g, 2, 1);
  expect_valid_partition(g, parts, 2);
  // A straight cut line across a 5x5 vertex grid severs 5 axis edges + 4
  // diagonals; nothing balanced does better than a staircase of 9 edges.
  EXPECT_LE(cut_size(g, parts), 13u);
}

TEST(Partition, RandomMeshesAreValidAndDeterministic) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto g = build_adjacency(triangulate(random_simple_polygon(3, 12, Box2{}, seed), 0.05));
    for (std::size_t k : {4u, 8u, 20u}) {
      const auto parts = partition(g, k, seed);
      expect_valid_partition(g, parts, k);
      EXPECT_EQ(parts, partition(g, k, seed));
    }
  }
}

TEST(Partition, Errors) {
  const auto g = path_graph(5);
  EXPECT_THROW(partition(g, 0, 0), PartitionError);
  EXPECT_THROW(partition(g, 6, 0), PartitionError);
  AdjGraph split = path_graph(6);
  split.neighbors[2].erase(std::find(split.neighbors[2].begin(), split.neighbors[2].end(), 3));
  split.neighbors[3].erase(std::find(split.neighbors[3].begin(), split.neighbors[3].end(), 2));
  try {
    partition(split, 2, 0);
    FAIL() << "disconnected graph accepted";
  } catch (const PartitionError& e) {
    EXPECT_NE(std::string(e.what()).find("2 components"), std::string::npos);
  }
}

TEST(Partition, SinglePartIsEverything) {
  const auto g = path_graph(7);
  const auto parts = partition(g, 1, 0);
  ASSERT_EQ(parts.size(), 1u);
  EXPECT_EQ(parts[0].size(), 7u);
}

TEST(Overlap, PathExtensionByDepth) {
  const auto g = path_graph(12);
  const std::vector<std::vector<Index>> cores{{0, 1, 2, 3}, {4, 5, 6, 7}, {8, 9, 10, 11}};
  const auto d = extend(g, cores, 2);
  EXPECT_EQ(d.parts[0], (std::vector<Index>{0, 1, 2, 3, 4, 5}));
  EXPECT_EQ(d.parts[1], (std::vector<Index>{2, 3, 4, 5, 6, 7, 8, 9}));
  EXPECT_EQ(d.overlap_factor, 2u);
  EXPECT_EQ(d.coverage[3], 2u);
  EXPECT_EQ(d.coverage[0], 1u);
}

TEST(Overlap, MatchesBfsBallOnMesh) {
  const auto g = build_adjacency(triangulate(random_simple_polygon(3, 12, Box2{}, 11), 0.08));
  const auto cores = partition(g, 6, 2);
  for (std::size_t depth : {0u, 1u, 3u}) {
    const auto d = extend(g, cores, depth);
    for (std::size_t k = 0; k < cores.size(); ++k) {
      const auto want = ball(g, cores[k], depth);
      EXPECT_EQ(std::set<Index>(d.parts[k].begin(), d.parts[k].end()), want);
    }
    std::size_t maxcov = 0;
    for (Index v = 0; v < g.n; ++v) {
      std::size_t c = 0;
      for (const auto& p : d.parts) c += std::binary_search(p.begin(), p.end(), v);
      EXPECT_EQ(c, d.coverage[v]);
      maxcov = std::max(maxcov, c);
    }
    EXPECT_EQ(d.overlap_factor, maxcov);
    if (depth == 0) { EXPECT_EQ(d.overlap_factor, 1u); }
  }
}

TEST(Overlap, UncoveredVertexRejected) {
  const auto g = path_graph(4);
  EXPECT_THROW(extend(g, {{0, 1}}, 1), ConsistencyError);
}

TEST(Restriction, RestrictExtendRoundTrip) {
  const Field u{1, 2, 3, 4, 5};
  const std::vector<Index> part{1, 3, 4};
  const Field r = restrict_to(u, part);
  EXPECT_EQ(r, (Field{2, 4, 5}));
  EXPECT_EQ(extend_by_zero(r, part, 5), (Field{0, 2, 0, 4, 5}));
  EXPECT_THROW(extend_by_zero(Field{1.0}, part, 5), ConsistencyError);
}
