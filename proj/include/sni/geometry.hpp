#ifndef SNI_GEOMETRY_HPP
#define SNI_GEOMETRY_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "sni/core.hpp"

namespace sni {

// ---------------------------------------------------------------------------
// Polygons
// ---------------------------------------------------------------------------

struct Polygon {
  std::vector<Point2> vertices;

  std::size_t size() const { return vertices.size(); }

  double signed_area() const {
    double a = 0.0;
    const std::size_t n = vertices.size();
    for (std::size_t i = 0; i < n; ++i) a += cross(vertices[i], vertices[(i + 1) % n]);
    return 0.5 * a;
  }
};

/// Closed-segment intersection test (touching counts).
inline bool segments_intersect(Point2 a, Point2 b, Point2 c, Point2 d) {
  auto on_segment = [](Point2 p, Point2 q, Point2 r) {
    return std::min(p.x, q.x) <= r.x && r.x <= std::max(p.x, q.x) && std::min(p.y, q.y) <= r.y &&
           r.y <= std::max(p.y, q.y);
  };
  auto sign = [](double v) { return (v > 0.0) - (v < 0.0); };
  const int d1 = sign(orient2d(c, d, a));
  const int d2 = sign(orient2d(c, d, b));
  const int d3 = sign(orient2d(a, b, c));
  const int d4 = sign(orient2d(a, b, d));
  if (d1 * d2 < 0 && d3 * d4 < 0) return true;
  if (d1 == 0 && on_segment(c, d, a)) return true;
  if (d2 == 0 && on_segment(c, d, b)) return true;
  if (d3 == 0 && on_segment(a, b, c)) return true;
  if (d4 == 0 && on_segment(a, b, d)) return true;
  return false;
}

/// O(n^2) simplicity check: no repeated consecutive vertices, no pair of
/// non-adjacent edges touching, no adjacent edges folding back onto each other.
inline bool is_simple(const Polygon& poly) {
  const auto& v = poly.vertices;
  const std::size_t n = v.size();
  if (n < 3) return false;
  for (std::size_t i = 0; i < n; ++i) {
    const Point2 prev = v[(i + n - 1) % n], cur = v[i], next = v[(i + 1) % n];
    if (cur == next) return false;
    if (orient2d(prev, cur, next) == 0.0 && dot(prev - cur, next - cur) > 0.0) return false;
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool adjacent = (j == i + 1) || (i == 0 && j == n - 1);
      if (adjacent) continue;
      if (segments_intersect(v[i], v[(i + 1) % n], v[j], v[(j + 1) % n])) return false;
    }
  }
  return std::abs(poly.signed_area()) > 0.0;
}

namespace detail {

inline double point_segment_distance(Point2 p, Point2 a, Point2 b) {
  const Point2 ab = b - a;
  const double len2 = dot(ab, ab);
  double t = len2 > 0.0 ? dot(p - a, ab) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return distance(p, a + t * ab);
}

/// Rejects polygons that are simple but too thin to mesh sensibly.
inline bool well_shaped(const Polygon& poly, const Box2& box) {
  const double diag = std::hypot(box.width(), box.height());
  if (std::abs(poly.signed_area()) < 0.02 * box.width() * box.height()) return false;
  const auto& v = poly.vertices;
  const std::size_t n = v.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (distance(v[i], v[(i + 1) % n]) < 0.01 * diag) return false;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i || (j + 1) % n == i) continue;
      if (point_segment_distance(v[i], v[j], v[(j + 1) % n]) < 0.005 * diag) return false;
    }
  }
  return true;
}

/// Repeatedly reverses the chain between two crossing edges. Each reversal
/// strictly shortens the tour, so this terminates; the cap only guards
/// against floating-point ties.
inline bool uncross_2opt(std::vector<Point2>& v, std::size_t max_swaps) {
  const std::size_t n = v.size();
  for (std::size_t swaps = 0; swaps < max_swaps; ++swaps) {
    bool found = false;
    for (std::size_t i = 0; i < n && !found; ++i) {
      for (std::size_t j = i + 2; j < n && !found; ++j) {
        if (i == 0 && j == n - 1) continue;
        if (segments_intersect(v[i], v[i + 1], v[j], v[(j + 1) % n])) {
          std::reverse(v.begin() + static_cast<std::ptrdiff_t>(i + 1),
                       v.begin() + static_cast<std::ptrdiff_t>(j + 1));
          found = true;
        }
      }
    }
    if (!found) return true;
  }
  return false;
}

}  // namespace detail

/// Random simple polygon with a vertex count drawn uniformly from
/// [n_min, n_max]. Points are sampled in the box, ordered by angle about
/// their centroid and untangled with 2-opt moves; returned counter-clockwise.
inline Polygon random_simple_polygon(std::size_t n_min, std::size_t n_max, const Box2& box,
                                     std::uint64_t seed) {
  if (n_min < 3 || n_max < n_min) throw GenerationError("require 3 <= n_min <= n_max");
  if (!(box.width() > 0.0 && box.height() > 0.0)) throw GenerationError("degenerate bounding box");

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> count(n_min, n_max);
  std::uniform_real_distribution<double> ux(box.lo.x, box.hi.x);
  std::uniform_real_distribution<double> uy(box.lo.y, box.hi.y);

  constexpr int kMaxRetries = 100;
  for (int attempt = 0; attempt < kMaxRetries; ++attempt) {
    const std::size_t n = count(rng);
    std::vector<Point2> pts(n);
    for (auto& p : pts) p = {ux(rng), uy(rng)};

    Point2 c{};
    for (const auto& p : pts) c = c + p;
    c = (1.0 / static_cast<double>(n)) * c;
    std::sort(pts.begin(), pts.end(), [c](Point2 a, Point2 b) {
      return std::atan2(a.y - c.y, a.x - c.x) < std::atan2(b.y - c.y, b.x - c.x);
    });
    if (!detail::uncross_2opt(pts, 10 * n * n)) continue;

    Polygon poly{std::move(pts)};
    if (poly.signed_area() < 0.0) std::reverse(poly.vertices.begin(), poly.vertices.end());
    if (is_simple(poly) && detail::well_shaped(poly, box)) return poly;
  }
  throw GenerationError("no simple polygon after " + std::to_string(kMaxRetries) + " attempts");
}

// ---------------------------------------------------------------------------
// Triangle meshes
// ---------------------------------------------------------------------------

enum class BoundaryKind { Dirichlet, Neumann, Artificial };

inline const char* to_string(BoundaryKind k) {
  switch (k) {
    case BoundaryKind::Dirichlet: return "dirichlet";
    case BoundaryKind::Neumann: return "neumann";
    case BoundaryKind::Artificial: return "artificial";
  }
  return "?";
}

struct BoundaryTag {
  BoundaryKind kind = BoundaryKind::Dirichlet;
  int segment = 0;
  friend bool operator==(const BoundaryTag&, const BoundaryTag&) = default;
};

/// Boundary edge oriented as in its owning triangle (counter-clockwise around
/// the domain, clockwise around holes).
struct BoundaryEdge {
  std::array<Index, 2> v{};
  BoundaryTag tag{};
  friend bool operator==(const BoundaryEdge&, const BoundaryEdge&) = default;
};

using Triangle = std::array<Index, 3>;

inline std::uint64_t edge_key(Index a, Index b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint64_t>(b);
}

struct TriMesh {
  std::vector<Point2> vertices;
  std::vector<Triangle> triangles;
  std::vector<BoundaryEdge> boundary_edges;

  std::size_t num_vertices() const { return vertices.size(); }
  std::size_t num_triangles() const { return triangles.size(); }

  double triangle_area(std::size_t t) const {
    const auto& tri = triangles[t];
    return 0.5 * orient2d(vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]);
  }

  double area() const {
    double a = 0.0;
    for (std::size_t t = 0; t < triangles.size(); ++t) a += triangle_area(t);
    return a;
  }

  Box2 bbox() const {
    Box2 b{{std::numeric_limits<double>::max(), std::numeric_limits<double>::max()},
           {std::numeric_limits<double>::lowest(), std::numeric_limits<double>::lowest()}};
    for (const auto& p : vertices) {
      b.lo.x = std::min(b.lo.x, p.x);
      b.lo.y = std::min(b.lo.y, p.y);
      b.hi.x = std::max(b.hi.x, p.x);
      b.hi.y = std::max(b.hi.y, p.y);
    }
    return b;
  }

  /// Sorted unique (min, max) vertex pairs of every triangle edge.
  std::vector<std::array<Index, 2>> edges() const {
    std::vector<std::array<Index, 2>> out;
    out.reserve(3 * triangles.size());
    for (const auto& t : triangles) {
      for (int e = 0; e < 3; ++e) {
        Index a = t[e], b = t[(e + 1) % 3];
        if (a > b) std::swap(a, b);
        out.push_back({a, b});
      }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  double max_edge_length() const {
    double m = 0.0;
    for (const auto& e : edges()) m = std::max(m, distance(vertices[e[0]], vertices[e[1]]));
    return m;
  }

  /// True for every vertex touched by a boundary edge.
  std::vector<char> boundary_vertex_mask() const {
    std::vector<char> mask(vertices.size(), 0);
    for (const auto& be : boundary_edges) mask[be.v[0]] = mask[be.v[1]] = 1;
    return mask;
  }

  /// Throws MeshError describing the first violated invariant.
  void validate() const {
    const std::size_t n = vertices.size();
    std::unordered_map<std::uint64_t, int> count;
    for (std::size_t t = 0; t < triangles.size(); ++t) {
      for (Index i : triangles[t])
        if (i >= n) throw MeshError("triangle " + std::to_string(t) + " has out-of-range vertex");
      if (!(triangle_area(t) > 0.0))
        throw MeshError("triangle " + std::to_string(t) + " has non-positive area");
      for (int e = 0; e < 3; ++e) ++count[edge_key(triangles[t][e], triangles[t][(e + 1) % 3])];
    }
    std::unordered_map<std::uint64_t, int> bcount;
    std::vector<int> balance(n, 0);
    for (const auto& be : boundary_edges) {
      if (be.v[0] >= n || be.v[1] >= n) throw MeshError("boundary edge has out-of-range vertex");
      const auto key = edge_key(be.v[0], be.v[1]);
      if (++bcount[key] > 1) throw MeshError("duplicate boundary edge");
      auto it = count.find(key);
      if (it == count.end() || it->second != 1)
        throw MeshError("boundary edge (" + std::to_string(be.v[0]) + "," +
                        std::to_string(be.v[1]) + ") is not owned by exactly one triangle");
      ++balance[be.v[0]];
      --balance[be.v[1]];
    }
    for (const auto& [key, c] : count) {
      if (c > 2) throw MeshError("edge shared by more than two triangles");
      if (c == 1 && !bcount.contains(key)) throw MeshError("untagged boundary edge");
    }
    for (std::size_t i = 0; i < n; ++i)
      if (balance[i] != 0) throw MeshError("boundary edges do not form closed loops");
  }
};

/// Structured nx-by-ny cell grid over a box, each cell split along its
/// diagonal. Boundary segments are numbered bottom, right, top, left.
inline TriMesh make_grid_mesh(std::size_t nx, std::size_t ny, const Box2& box = {{0, 0}, {1, 1}}) {
  TriMesh m;
  auto id = [nx](std::size_t i, std::size_t j) { return j * (nx + 1) + i; };
  for (std::size_t j = 0; j <= ny; ++j)
    for (std::size_t i = 0; i <= nx; ++i)
      m.vertices.push_back({box.lo.x + box.width() * static_cast<double>(i) / static_cast<double>(nx),
                            box.lo.y + box.height() * static_cast<double>(j) / static_cast<double>(ny)});
  for (std::size_t j = 0; j < ny; ++j) {
    for (std::size_t i = 0; i < nx; ++i) {
      m.triangles.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
      m.triangles.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
    }
  }
  for (std::size_t i = 0; i < nx; ++i) m.boundary_edges.push_back({{id(i, 0), id(i + 1, 0)}, {BoundaryKind::Dirichlet, 0}});
  for (std::size_t j = 0; j < ny; ++j) m.boundary_edges.push_back({{id(nx, j), id(nx, j + 1)}, {BoundaryKind::Dirichlet, 1}});
  for (std::size_t i = nx; i > 0; --i) m.boundary_edges.push_back({{id(i, ny), id(i - 1, ny)}, {BoundaryKind::Dirichlet, 2}});
  for (std::size_t j = ny; j > 0; --j) m.boundary_edges.push_back({{id(0, j), id(0, j - 1)}, {BoundaryKind::Dirichlet, 3}});
  return m;
}

/// Splits every triangle into four through its edge midpoints, `rounds` times.
inline TriMesh refine_uniform(const TriMesh& mesh, std::size_t rounds) {
  TriMesh cur = mesh;
  for (std::size_t r = 0; r < rounds; ++r) {
    TriMesh next;
    next.vertices = cur.vertices;
    std::unordered_map<std::uint64_t, Index> mid;
    auto midpoint = [&](Index a, Index b) {
      const auto key = edge_key(a, b);
      auto it = mid.find(key);
      if (it != mid.end()) return it->second;
      const Index id = next.vertices.size();
      next.vertices.push_back(0.5 * (cur.vertices[a] + cur.vertices[b]));
      mid.emplace(key, id);
      return id;
    };
    next.triangles.reserve(4 * cur.triangles.size());
    for (const auto& t : cur.triangles) {
      const Index ab = midpoint(t[0], t[1]), bc = midpoint(t[1], t[2]), ca = midpoint(t[2], t[0]);
      next.triangles.push_back({t[0], ab, ca});
      next.triangles.push_back({ab, t[1], bc});
      next.triangles.push_back({ca, bc, t[2]});
      next.triangles.push_back({ab, bc, ca});
    }
    for (const auto& be : cur.boundary_edges) {
      const Index m = midpoint(be.v[0], be.v[1]);
      next.boundary_edges.push_back({{be.v[0], m}, be.tag});
      next.boundary_edges.push_back({{m, be.v[1]}, be.tag});
    }
    cur = std::move(next);
  }
  return cur;
}

namespace detail {

/// sin(angle at c + angle at d) scaled by the four edge lengths; negative
/// when the opposite angles of edge (a, b) sum past pi.
inline double delaunay_margin(Point2 a, Point2 b, Point2 c, Point2 d) {
  const Point2 ca = a - c, cb = b - c, da = a - d, db = b - d;
  const double sin_c = std::abs(cross(ca, cb)), cos_c = dot(ca, cb);
  const double sin_d = std::abs(cross(db, da)), cos_d = dot(db, da);
  return sin_c * cos_d + cos_c * sin_d;
}

inline bool locally_delaunay(Point2 a, Point2 b, Point2 c, Point2 d) {
  const double scale = norm(a - c) * norm(b - c) * norm(a - d) * norm(b - d);
  return delaunay_margin(a, b, c, d) >= -1e-10 * scale;
}

struct EdgeOwners {
  std::array<std::size_t, 2> tri{std::numeric_limits<std::size_t>::max(),
                                 std::numeric_limits<std::size_t>::max()};
};

inline std::unordered_map<std::uint64_t, EdgeOwners> edge_owners(const TriMesh& m) {
  std::unordered_map<std::uint64_t, EdgeOwners> owners;
  owners.reserve(3 * m.triangles.size());
  for (std::size_t t = 0; t < m.triangles.size(); ++t) {
    for (int e = 0; e < 3; ++e) {
      auto& o = owners[edge_key(m.triangles[t][e], m.triangles[t][(e + 1) % 3])];
      (o.tri[0] == std::numeric_limits<std::size_t>::max() ? o.tri[0] : o.tri[1]) = t;
    }
  }
  return owners;
}

inline Index opposite_vertex(const Triangle& t, Index a, Index b) {
  for (Index v : t)
    if (v != a && v != b) return v;
  return t[0];
}

/// Lawson edge flipping to a (boundary-constrained) Delaunay triangulation.
inline void delaunay_flip(TriMesh& m) {
  constexpr std::size_t kMaxPasses = 1000;
  for (std::size_t pass = 0; pass < kMaxPasses; ++pass) {
    bool flipped = false;
    auto owners = edge_owners(m);
    std::vector<char> touched(m.triangles.size(), 0);
    std::vector<std::uint64_t> keys;
    keys.reserve(owners.size());
    for (const auto& [key, o] : owners)
      if (o.tri[1] != std::numeric_limits<std::size_t>::max()) keys.push_back(key);
    std::sort(keys.begin(), keys.end());
    for (auto key : keys) {
      const auto& o = owners[key];
      const std::size_t t1 = o.tri[0], t2 = o.tri[1];
      if (touched[t1] || touched[t2]) continue;
      const Index a = static_cast<Index>(key >> 32), b = static_cast<Index>(key & 0xffffffffu);
      const Index c = opposite_vertex(m.triangles[t1], a, b);
      const Index d = opposite_vertex(m.triangles[t2], a, b);
      const auto& P = m.vertices;
      if (locally_delaunay(P[a], P[b], P[c], P[d])) continue;
      Triangle n1{c, a, d}, n2{d, b, c};
      if (orient2d(P[n1[0]], P[n1[1]], P[n1[2]]) < 0.0) std::swap(n1[1], n1[2]);
      if (orient2d(P[n2[0]], P[n2[1]], P[n2[2]]) < 0.0) std::swap(n2[1], n2[2]);
      if (!(orient2d(P[n1[0]], P[n1[1]], P[n1[2]]) > 0.0 && orient2d(P[n2[0]], P[n2[1]], P[n2[2]]) > 0.0))
        continue;
      m.triangles[t1] = n1;
      m.triangles[t2] = n2;
      touched[t1] = touched[t2] = 1;
      flipped = true;
    }
    if (!flipped) return;
  }
}

/// One Laplacian smoothing sweep over interior vertices. A move is kept only
/// if incident triangles stay positive, no incident edge exceeds max_edge and
/// all affected edges remain locally Delaunay.
inline void laplacian_smooth(TriMesh& m, double max_edge) {
  const auto boundary = m.boundary_vertex_mask();
  std::vector<std::vector<std::size_t>> incident(m.vertices.size());
  for (std::size_t t = 0; t < m.triangles.size(); ++t)
    for (Index v : m.triangles[t]) incident[v].push_back(t);
  const auto owners = edge_owners(m);
  std::vector<std::vector<Index>> nbrs(m.vertices.size());
  for (const auto& e : m.edges()) {
    nbrs[e[0]].push_back(e[1]);
    nbrs[e[1]].push_back(e[0]);
  }

  auto acceptable = [&](Index v) {
    for (std::size_t t : incident[v]) {
      const auto& tri = m.triangles[t];
      if (!(orient2d(m.vertices[tri[0]], m.vertices[tri[1]], m.vertices[tri[2]]) > 0.0)) return false;
      for (int e = 0; e < 3; ++e) {
        const Index a = tri[e], b = tri[(e + 1) % 3];
        if (distance(m.vertices[a], m.vertices[b]) > max_edge) return false;
        const auto& o = owners.at(edge_key(a, b));
        if (o.tri[1] == std::numeric_limits<std::size_t>::max()) continue;
        const Index c = opposite_vertex(m.triangles[o.tri[0]], a, b);
        const Index d = opposite_vertex(m.triangles[o.tri[1]], a, b);
        if (!locally_delaunay(m.vertices[a], m.vertices[b], m.vertices[c], m.vertices[d])) return false;
      }
    }
    return true;
  };

  for (Index v = 0; v < m.vertices.size(); ++v) {
    if (boundary[v] || nbrs[v].empty()) continue;
    Point2 avg{};
    for (Index u : nbrs[v]) avg = avg + m.vertices[u];
    avg = (1.0 / static_cast<double>(nbrs[v].size())) * avg;
    const Point2 old = m.vertices[v];
    m.vertices[v] = avg;
    if (!acceptable(v)) m.vertices[v] = old;
  }
}

inline std::vector<Triangle> ear_clip(const std::vector<Point2>& v) {
  std::vector<Index> ring(v.size());
  for (Index i = 0; i < v.size(); ++i) ring[i] = i;
  std::vector<Triangle> tris;
  auto inside_or_on = [](Point2 p, Point2 a, Point2 b, Point2 c) {
    return orient2d(a, b, p) >= 0.0 && orient2d(b, c, p) >= 0.0 && orient2d(c, a, p) >= 0.0;
  };
  while (ring.size() > 3) {
    const std::size_t n = ring.size();
    bool clipped = false;
    // Prefer the ear with the largest minimum angle for better seed quality.
    double best_quality = -1.0;
    std::size_t best = n;
    for (std::size_t i = 0; i < n; ++i) {
      const Index ia = ring[(i + n - 1) % n], ib = ring[i], ic = ring[(i + 1) % n];
      const Point2 a = v[ia], b = v[ib], c = v[ic];
      if (!(orient2d(a, b, c) > 0.0)) continue;
      bool ear = true;
      for (std::size_t j = 0; j < n && ear; ++j) {
        const Index ij = ring[j];
        if (ij == ia || ij == ib || ij == ic) continue;
        if (inside_or_on(v[ij], a, b, c)) ear = false;
      }
      if (!ear) continue;
      const double ab = distance(a, b), bc = distance(b, c), ca = distance(c, a);
      const double q = orient2d(a, b, c) / (ab * ab + bc * bc + ca * ca);
      if (q > best_quality) {
        best_quality = q;
        best = i;
      }
    }
    if (best < n) {
      tris.push_back({ring[(best + n - 1) % n], ring[best], ring[(best + 1) % n]});
      ring.erase(ring.begin() + static_cast<std::ptrdiff_t>(best));
      clipped = true;
    }
    if (!clipped) throw MeshingError("ear clipping found no ear; polygon is not simple");
  }
  if (!(orient2d(v[ring[0]], v[ring[1]], v[ring[2]]) > 0.0))
    throw MeshingError("degenerate final ear");
  tris.push_back({ring[0], ring[1], ring[2]});
  return tris;
}

}  // namespace detail

/// Conforming triangulation of a simple polygon with every edge no longer
/// than 1.5 * target_edge_length. Boundary edges carry the index of the
/// polygon edge they came from (kind Dirichlet; retag for mixed problems).
inline TriMesh triangulate(const Polygon& polygon, double target_edge_length) {
  if (!(target_edge_length > 0.0)) throw MeshingError("target edge length must be positive");
  if (polygon.size() < 3) throw MeshingError("polygon needs at least 3 vertices");
  const double area = polygon.signed_area();
  double extent = 0.0;
  for (const auto& p : polygon.vertices)
    for (const auto& q : polygon.vertices) extent = std::max(extent, distance(p, q));
  if (!(std::abs(area) > 1e-12 * extent * extent)) throw MeshingError("polygon has near-zero area");

  const std::size_t n = polygon.size();
  std::vector<Point2> pts = polygon.vertices;
  std::vector<int> segment(n);
  for (std::size_t i = 0; i < n; ++i) segment[i] = static_cast<int>(i);
  if (area < 0.0) {
    // Reverse to counter-clockwise; edge j of the reversed ring is the
    // original edge n-2-j.
    std::reverse(pts.begin(), pts.end());
    for (std::size_t j = 0; j < n; ++j) segment[j] = static_cast<int>((2 * n - 2 - j) % n);
  }

  TriMesh mesh;
  mesh.vertices = pts;
  mesh.triangles = detail::ear_clip(pts);
  for (std::size_t i = 0; i < n; ++i)
    mesh.boundary_edges.push_back({{i, (i + 1) % n}, {BoundaryKind::Dirichlet, segment[i]}});
  detail::delaunay_flip(mesh);

  const double bound = 1.5 * target_edge_length;
  while (mesh.max_edge_length() > bound) {
    mesh = refine_uniform(mesh, 1);
    detail::delaunay_flip(mesh);
  }
  detail::laplacian_smooth(mesh, bound);
  return mesh;
}

/// Replaces the boundary kind of every edge whose segment maps to a kind.
inline TriMesh retag_boundary(TriMesh mesh, const std::vector<BoundaryKind>& kind_of_segment) {
  for (auto& be : mesh.boundary_edges) {
    const auto s = static_cast<std::size_t>(be.tag.segment);
    if (be.tag.segment >= 0 && s < kind_of_segment.size()) be.tag.kind = kind_of_segment[s];
  }
  return mesh;
}

// ---------------------------------------------------------------------------
// Submeshes
// ---------------------------------------------------------------------------

enum class VertexRole { Interior, GlobalDirichlet, GlobalNeumann, Artificial };

struct SubMesh {
  TriMesh mesh;
  /// Local vertex -> parent vertex, strictly increasing.
  std::vector<Index> global_ids;
  /// Classification of every local vertex.
  std::vector<VertexRole> roles;
  /// Local ids of boundary vertices that take their value from the iterate.
  std::vector<Index> artificial_boundary;

  std::size_t num_vertices() const { return global_ids.size(); }
};

/// Mesh induced by the triangles whose three vertices all lie in vertex_ids.
/// Local boundary edges inherit the parent tag when they are parent boundary
/// edges and are tagged Artificial otherwise. Local boundary vertices are
/// classified as: parent Dirichlet vertex -> GlobalDirichlet; else touching
/// an artificial edge -> Artificial; else GlobalNeumann.
inline SubMesh extract_submesh(const TriMesh& mesh, std::span<const Index> vertex_ids) {
  const std::size_t n = mesh.num_vertices();
  std::vector<char> in_set(n, 0);
  for (Index v : vertex_ids) {
    if (v >= n) throw MeshError("submesh vertex id out of range");
    in_set[v] = 1;
  }

  std::vector<std::size_t> induced;
  std::vector<char> used(n, 0);
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& tri = mesh.triangles[t];
    if (in_set[tri[0]] && in_set[tri[1]] && in_set[tri[2]]) {
      induced.push_back(t);
      used[tri[0]] = used[tri[1]] = used[tri[2]] = 1;
    }
  }
  if (induced.empty()) throw MeshError("vertex set induces no triangle");

  SubMesh sub;
  std::vector<Index> local_of(n, std::numeric_limits<Index>::max());
  for (Index v = 0; v < n; ++v) {
    if (!used[v]) continue;
    local_of[v] = sub.global_ids.size();
    sub.global_ids.push_back(v);
    sub.mesh.vertices.push_back(mesh.vertices[v]);
  }

  std::unordered_map<std::uint64_t, int> count;
  for (std::size_t t : induced) {
    const auto& tri = mesh.triangles[t];
    sub.mesh.triangles.push_back({local_of[tri[0]], local_of[tri[1]], local_of[tri[2]]});
    for (int e = 0; e < 3; ++e) ++count[edge_key(tri[e], tri[(e + 1) % 3])];
  }

  std::unordered_map<std::uint64_t, BoundaryTag> parent_tag;
  std::vector<char> parent_dirichlet(n, 0);
  for (const auto& be : mesh.boundary_edges) {
    parent_tag.emplace(edge_key(be.v[0], be.v[1]), be.tag);
    if (be.tag.kind != BoundaryKind::Neumann) parent_dirichlet[be.v[0]] = parent_dirichlet[be.v[1]] = 1;
  }

  const std::size_t nl = sub.global_ids.size();
  std::vector<char> on_boundary(nl, 0), touches_artificial(nl, 0);
  for (std::size_t t : induced) {
    const auto& tri = mesh.triangles[t];
    for (int e = 0; e < 3; ++e) {
      const Index a = tri[e], b = tri[(e + 1) % 3];
      const auto key = edge_key(a, b);
      if (count[key] != 1) continue;
      auto it = parent_tag.find(key);
      const BoundaryTag tag = it != parent_tag.end() ? it->second : BoundaryTag{BoundaryKind::Artificial, -1};
      sub.mesh.boundary_edges.push_back({{local_of[a], local_of[b]}, tag});
      on_boundary[local_of[a]] = on_boundary[local_of[b]] = 1;
      if (tag.kind == BoundaryKind::Artificial) touches_artificial[local_of[a]] = touches_artificial[local_of[b]] = 1;
    }
  }

  sub.roles.assign(nl, VertexRole::Interior);
  for (Index i = 0; i < nl; ++i) {
    if (!on_boundary[i]) continue;
    if (parent_dirichlet[sub.global_ids[i]]) {
      sub.roles[i] = VertexRole::GlobalDirichlet;
    } else if (touches_artificial[i]) {
      sub.roles[i] = VertexRole::Artificial;
      sub.artificial_boundary.push_back(i);
    } else {
      sub.roles[i] = VertexRole::GlobalNeumann;
    }
  }
  return sub;
}

}  // namespace sni

#endif  // SNI_GEOMETRY_HPP
