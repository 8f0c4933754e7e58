#ifndef SNI_DECOMP_HPP
#define SNI_DECOMP_HPP

#include <algorithm>
#include <cstdint>
#include <deque>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "sni/core.hpp"
#include "sni/geometry.hpp"

namespace sni {

/// Vertex adjacency of a mesh: i ~ j iff they share a triangle edge.
struct AdjGraph {
  std::size_t n = 0;
  std::vector<std::vector<Index>> neighbors;  // sorted, no self loops

  std::size_t num_edges() const {
    std::size_t s = 0;
    for (const auto& nb : neighbors) s += nb.size();
    return s / 2;
  }
};

inline AdjGraph build_adjacency(const TriMesh& mesh) {
  AdjGraph g;
  g.n = mesh.num_vertices();
  g.neighbors.assign(g.n, {});
  for (const auto& e : mesh.edges()) {
    g.neighbors[e[0]].push_back(e[1]);
    g.neighbors[e[1]].push_back(e[0]);
  }
  for (auto& nb : g.neighbors) std::sort(nb.begin(), nb.end());
  return g;
}

/// Path graph 0 - 1 - ... - (n-1).
inline AdjGraph path_graph(std::size_t n) {
  AdjGraph g;
  g.n = n;
  g.neighbors.assign(n, {});
  for (Index i = 0; i + 1 < n; ++i) {
    g.neighbors[i].push_back(i + 1);
    g.neighbors[i + 1].push_back(i);
  }
  return g;
}

/// Connected components, each sorted, ordered by smallest vertex.
inline std::vector<std::vector<Index>> connected_components(const AdjGraph& g) {
  std::vector<std::vector<Index>> comps;
  std::vector<char> seen(g.n, 0);
  for (Index s = 0; s < g.n; ++s) {
    if (seen[s]) continue;
    std::vector<Index> comp{s};
    seen[s] = 1;
    for (std::size_t k = 0; k < comp.size(); ++k)
      for (Index u : g.neighbors[comp[k]])
        if (!seen[u]) {
          seen[u] = 1;
          comp.push_back(u);
        }
    std::sort(comp.begin(), comp.end());
    comps.push_back(std::move(comp));
  }
  return comps;
}

/// Whether `part` induces a connected subgraph (skipping `excluded`).
inline bool induces_connected(const AdjGraph& g, std::span<const Index> part,
                              Index excluded = std::numeric_limits<Index>::max()) {
  std::vector<char> in(g.n, 0);
  std::size_t size = 0;
  Index start = std::numeric_limits<Index>::max();
  for (Index v : part) {
    if (v == excluded) continue;
    in[v] = 1;
    ++size;
    start = std::min(start, v);
  }
  if (size == 0) return true;
  std::vector<Index> stack{start};
  in[start] = 2;
  std::size_t reached = 1;
  while (!stack.empty()) {
    const Index v = stack.back();
    stack.pop_back();
    for (Index u : g.neighbors[v])
      if (in[u] == 1) {
        in[u] = 2;
        ++reached;
        stack.push_back(u);
      }
  }
  return reached == size;
}

namespace detail {

inline std::vector<Index> bfs_distances(const AdjGraph& g, std::span<const Index> sources) {
  std::vector<Index> dist(g.n, std::numeric_limits<Index>::max());
  std::deque<Index> q;
  for (Index s : sources) {
    dist[s] = 0;
    q.push_back(s);
  }
  while (!q.empty()) {
    const Index v = q.front();
    q.pop_front();
    for (Index u : g.neighbors[v])
      if (dist[u] == std::numeric_limits<Index>::max()) {
        dist[u] = dist[v] + 1;
        q.push_back(u);
      }
  }
  return dist;
}

/// K seeds by farthest-point sampling from a random first seed.
inline std::vector<Index> farthest_point_seeds(const AdjGraph& g, std::size_t k, std::mt19937_64& rng) {
  std::uniform_int_distribution<Index> pick(0, g.n - 1);
  std::vector<Index> seeds{pick(rng)};
  while (seeds.size() < k) {
    const auto dist = bfs_distances(g, seeds);
    Index best = 0;
    for (Index v = 1; v < g.n; ++v)
      if (dist[v] > dist[best]) best = v;
    seeds.push_back(best);
  }
  return seeds;
}

/// Grows K regions breadth-first; the currently smallest region that can
/// still grow takes the next vertex.
inline std::vector<std::size_t> grow_regions(const AdjGraph& g, std::span<const Index> seeds) {
  constexpr auto kFree = std::numeric_limits<std::size_t>::max();
  const std::size_t k = seeds.size();
  std::vector<std::size_t> owner(g.n, kFree), size(k, 1);
  std::vector<std::deque<Index>> front(k);
  for (std::size_t p = 0; p < k; ++p) {
    owner[seeds[p]] = p;
    for (Index u : g.neighbors[seeds[p]]) front[p].push_back(u);
  }
  std::size_t assigned = k;
  while (assigned < g.n) {
    std::size_t best = kFree;
    for (std::size_t p = 0; p < k; ++p) {
      while (!front[p].empty() && owner[front[p].front()] != kFree) front[p].pop_front();
      if (front[p].empty()) continue;
      if (best == kFree || size[p] < size[best]) best = p;
    }
    if (best == kFree) break;
    const Index v = front[best].front();
    front[best].pop_front();
    owner[v] = best;
    ++size[best];
    ++assigned;
    for (Index u : g.neighbors[v])
      if (owner[u] == kFree) front[best].push_back(u);
  }
  return owner;
}

inline std::vector<Index> members(const std::vector<std::size_t>& owner, std::size_t p) {
  std::vector<Index> out;
  for (Index v = 0; v < owner.size(); ++v)
    if (owner[v] == p) out.push_back(v);
  return out;
}

/// Boundary vertex moves that lower the edge cut (or, at equal cut, reduce
/// imbalance) while keeping every part connected and under the size cap.
/// Oversized parts may also shed vertices at a cut penalty.
inline void refine_boundary(const AdjGraph& g, std::vector<std::size_t>& owner, std::size_t k, std::size_t cap) {
  std::vector<std::size_t> size(k, 0);
  for (auto o : owner) ++size[o];
  std::vector<std::size_t> count(k, 0);
  for (int pass = 0; pass < 4; ++pass) {
    bool moved = false;
    for (Index v = 0; v < g.n; ++v) {
      const std::size_t p = owner[v];
      if (size[p] <= 1) continue;
      std::fill(count.begin(), count.end(), 0);
      for (Index u : g.neighbors[v]) ++count[owner[u]];
      std::size_t best = p;
      long best_gain = std::numeric_limits<long>::min();
      for (Index u : g.neighbors[v]) {
        const std::size_t q = owner[u];
        if (q == p || size[q] + 1 > cap) continue;
        const long gain = static_cast<long>(count[q]) - static_cast<long>(count[p]);
        const bool balance_gain = size[p] > size[q] + 1;
        const bool acceptable = gain > 0 || (gain == 0 && balance_gain) || (size[p] > cap && balance_gain);
        if (!acceptable) continue;
        if (gain > best_gain || (gain == best_gain && size[q] < size[best])) {
          best = q;
          best_gain = gain;
        }
      }
      if (best == p) continue;
      const auto part = members(owner, p);
      if (!induces_connected(g, part, v)) continue;
      owner[v] = best;
      --size[p];
      ++size[best];
      moved = true;
    }
    if (!moved) break;
  }
}

}  // namespace detail

/// K disjoint connected parts covering all vertices, with max part size at
/// most 1.5 n / K. Greedy graph growing from farthest-point seeds followed by
/// one boundary refinement; reseeded up to 10 times if balance fails.
inline std::vector<std::vector<Index>> partition(const AdjGraph& g, std::size_t k, std::uint64_t seed) {
  if (k == 0) throw PartitionError("K must be at least 1");
  if (k > g.n) throw PartitionError("K = " + std::to_string(k) + " exceeds vertex count " + std::to_string(g.n));
  const auto comps = connected_components(g);
  if (comps.size() != 1) {
    std::string msg = "graph is disconnected into " + std::to_string(comps.size()) + " components:";
    for (const auto& c : comps) msg += " {first=" + std::to_string(c.front()) + ", size=" + std::to_string(c.size()) + "}";
    throw PartitionError(msg);
  }
  if (k == 1) {
    std::vector<Index> all(g.n);
    for (Index i = 0; i < g.n; ++i) all[i] = i;
    return {all};
  }

  const double limit = 1.5 * static_cast<double>(g.n) / static_cast<double>(k);
  const auto cap = static_cast<std::size_t>(limit);
  constexpr int kAttempts = 10;
  for (int attempt = 0; attempt < kAttempts; ++attempt) {
    std::mt19937_64 rng(seed + 0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(attempt));
    const auto seeds = detail::farthest_point_seeds(g, k, rng);
    auto owner = detail::grow_regions(g, seeds);
    detail::refine_boundary(g, owner, k, cap);

    std::vector<std::vector<Index>> parts(k);
    for (Index v = 0; v < g.n; ++v) parts[owner[v]].push_back(v);
    bool ok = true;
    for (const auto& p : parts)
      if (p.empty() || static_cast<double>(p.size()) > limit || !induces_connected(g, p)) ok = false;
    if (ok) return parts;
  }
  throw PartitionError("no balanced partition after " + std::to_string(kAttempts) + " attempts");
}

/// Overlapping cover: core parts extended by `depth` rings of neighbors.
struct Decomposition {
  std::vector<std::vector<Index>> parts;
  std::vector<std::vector<Index>> core_parts;
  std::size_t depth = 0;
  std::size_t overlap_factor = 0;
  /// Number of parts covering each vertex.
  std::vector<std::size_t> coverage;

  std::size_t size() const { return parts.size(); }
};

inline Decomposition extend(const AdjGraph& g, std::vector<std::vector<Index>> core_parts, std::size_t depth) {
  Decomposition d;
  d.depth = depth;
  d.coverage.assign(g.n, 0);
  std::vector<char> in(g.n, 0);
  for (const auto& core : core_parts) {
    std::fill(in.begin(), in.end(), 0);
    std::vector<Index> part(core.begin(), core.end());
    for (Index v : part) in[v] = 1;
    std::size_t layer_begin = 0;
    for (std::size_t ring = 0; ring < depth; ++ring) {
      const std::size_t layer_end = part.size();
      for (std::size_t i = layer_begin; i < layer_end; ++i)
        for (Index u : g.neighbors[part[i]])
          if (!in[u]) {
            in[u] = 1;
            part.push_back(u);
          }
      layer_begin = layer_end;
    }
    std::sort(part.begin(), part.end());
    for (Index v : part) ++d.coverage[v];
    d.parts.push_back(std::move(part));
  }
  d.core_parts = std::move(core_parts);
  for (auto& c : d.core_parts) std::sort(c.begin(), c.end());
  for (Index v = 0; v < g.n; ++v)
    if (d.coverage[v] == 0) throw ConsistencyError("vertex " + std::to_string(v) + " is not covered");
  d.overlap_factor = g.n ? *std::max_element(d.coverage.begin(), d.coverage.end()) : 0;
  return d;
}

/// R_k u: the entries of u at `part`, in part order.
inline Field restrict_to(std::span<const double> u, std::span<const Index> part) {
  Field out(part.size());
  for (std::size_t i = 0; i < part.size(); ++i) {
    if (part[i] >= u.size()) throw ConsistencyError("restriction index out of range");
    out[i] = u[part[i]];
  }
  return out;
}

/// R_k^T w: scatters w onto `part`, zero elsewhere.
inline Field extend_by_zero(std::span<const double> w, std::span<const Index> part, std::size_t n) {
  if (w.size() != part.size()) throw ConsistencyError("local vector length does not match part");
  Field out(n, 0.0);
  for (std::size_t i = 0; i < part.size(); ++i) {
    if (part[i] >= n) throw ConsistencyError("extension index out of range");
    out[part[i]] = w[i];
  }
  return out;
}

}  // namespace sni

#endif  // SNI_DECOMP_HPP
