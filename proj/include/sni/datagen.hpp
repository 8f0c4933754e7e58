#ifndef SNI_DATAGEN_HPP
#define SNI_DATAGEN_HPP

#include <cstdio>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "sni/core.hpp"
#include "sni/fem.hpp"
#include "sni/geometry.hpp"
#include "sni/io.hpp"
#include "sni/parallel.hpp"
#include "sni/schwarz.hpp"
#include "sni/surrogate.hpp"
#include "sni/symmetry.hpp"

namespace sni {

inline constexpr double kDarcyMinCoefficient = 0.01;
inline constexpr double kHeatDt = 0.01;
inline constexpr std::size_t kHeatSteps = 10;

/// Boundary data and input fields drawn for one training sample. The mesh
/// is returned as well because mixed problems retag part of the boundary.
struct BoundarySample {
  TriMesh mesh;
  ProblemSpec spec;
  /// Mixed problems: Dirichlet value range r_D and Neumann range r_N used.
  double dirichlet_range = 1.0;
  double neumann_range = 1.0;
};

namespace detail {

inline std::vector<Index> boundary_vertices(const TriMesh& mesh) {
  std::vector<Index> out;
  const auto mask = mesh.boundary_vertex_mask();
  for (Index v = 0; v < mask.size(); ++v)
    if (mask[v]) out.push_back(v);
  return out;
}

/// Boundary edge indices of the longest loop in traversal order.
inline std::vector<std::size_t> outer_loop_edges(const TriMesh& mesh) {
  std::unordered_map<Index, std::size_t> out_edge;
  for (std::size_t e = 0; e < mesh.boundary_edges.size(); ++e) out_edge[mesh.boundary_edges[e].v[0]] = e;
  std::vector<char> seen(mesh.boundary_edges.size(), 0);
  std::vector<std::size_t> best;
  double best_len = -1.0;
  for (std::size_t e0 = 0; e0 < mesh.boundary_edges.size(); ++e0) {
    if (seen[e0]) continue;
    std::vector<std::size_t> loop;
    double len = 0.0;
    for (std::size_t e = e0; !seen[e];) {
      seen[e] = 1;
      loop.push_back(e);
      const auto& be = mesh.boundary_edges[e];
      len += distance(mesh.vertices[be.v[0]], mesh.vertices[be.v[1]]);
      auto it = out_edge.find(be.v[1]);
      if (it == out_edge.end()) break;
      e = it->second;
    }
    if (len > best_len) {
      best_len = len;
      best = std::move(loop);
    }
  }
  return best;
}

}  // namespace detail

/// Random boundary data and input fields for one sample, following the
/// training-data recipes per equation.
inline BoundarySample sample_boundary(Equation equation, const TriMesh& mesh, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

  BoundarySample out;
  out.mesh = mesh;
  for (auto& be : out.mesh.boundary_edges) be.tag.kind = BoundaryKind::Dirichlet;
  auto& spec = out.spec;
  spec.equation = equation;
  const std::size_t n = mesh.num_vertices();
  const auto bverts = detail::boundary_vertices(mesh);

  switch (equation) {
    case Equation::LaplaceDirichlet:
    case Equation::NonlinearLaplace:
      for (Index v : bverts) spec.dirichlet[v] = unit(rng);
      break;

    case Equation::LaplaceMixed: {
      if (unit(rng) < 0.2) {
        for (Index v : bverts) spec.dirichlet[v] = unit(rng);
        break;
      }
      // One connected Neumann arc on the outer loop covering a fraction
      // 1 - U[0.5, 1] of the boundary length, kept strictly below one half
      // and at least one edge long.
      const auto loop = detail::outer_loop_edges(out.mesh);
      double total = 0.0;
      auto edge_len = [&](std::size_t e) {
        const auto& be = out.mesh.boundary_edges[e];
        return distance(mesh.vertices[be.v[0]], mesh.vertices[be.v[1]]);
      };
      for (const auto& be : out.mesh.boundary_edges) total += distance(mesh.vertices[be.v[0]], mesh.vertices[be.v[1]]);
      const double target = (1.0 - uniform(0.5, 1.0)) * total;
      const std::size_t start = std::uniform_int_distribution<std::size_t>(0, loop.size() - 1)(rng);
      double covered = 0.0;
      for (std::size_t i = 0; i + 1 < loop.size(); ++i) {
        const std::size_t e = loop[(start + i) % loop.size()];
        const double len = edge_len(e);
        if (i > 0 && covered + len > target) break;
        if (covered + len >= 0.5 * total) break;
        out.mesh.boundary_edges[e].tag.kind = BoundaryKind::Neumann;
        covered += len;
      }
      const double r = uniform(0.5, 1.0);
      if (unit(rng) < 0.5)
        out.dirichlet_range = r;
      else
        out.neumann_range = r;
      std::vector<char> dir(n, 0), neu(n, 0);
      for (const auto& be : out.mesh.boundary_edges)
        for (Index v : be.v) (be.tag.kind == BoundaryKind::Neumann ? neu : dir)[v] = 1;
      for (Index v : bverts) {
        if (dir[v]) spec.dirichlet[v] = uniform(0.0, out.dirichlet_range);
        if (neu[v]) spec.neumann[v] = uniform(0.0, out.neumann_range);
      }
      break;
    }

    case Equation::Darcy: {
      out.dirichlet_range = uniform(0.3, 1.0);
      for (Index v : bverts) spec.dirichlet[v] = uniform(0.0, out.dirichlet_range);
      spec.coeff_a.resize(n);
      spec.source_f.resize(n);
      for (Index v = 0; v < n; ++v) spec.coeff_a[v] = std::max(kDarcyMinCoefficient, unit(rng));
      for (Index v = 0; v < n; ++v) spec.source_f[v] = unit(rng);
      break;
    }

    case Equation::Heat: {
      spec.alpha = uniform(0.8, 1.0);
      spec.dt = kHeatDt;
      spec.n_steps = kHeatSteps;
      spec.initial_u.resize(n);
      for (Index v = 0; v < n; ++v) spec.initial_u[v] = unit(rng);
      spec.dirichlet_steps.resize(kHeatSteps + 1);
      for (auto& m : spec.dirichlet_steps)
        for (Index v : bverts) m[v] = unit(rng);
      spec.dirichlet = spec.dirichlet_steps.front();
      break;
    }
  }
  return out;
}

/// Empty if every sampled quantity lies in its documented range; otherwise a
/// description of the first violation.
inline std::string check_sample_ranges(const BoundarySample& s) {
  auto in = [](double x, double lo, double hi) { return x >= lo && x <= hi; };
  const auto& spec = s.spec;
  for (const auto& [v, val] : spec.dirichlet)
    if (!in(val, 0.0, 1.0)) return "Dirichlet value " + std::to_string(val) + " outside [0, 1]";
  for (const auto& [v, val] : spec.neumann)
    if (!in(val, 0.0, 1.0)) return "Neumann value " + std::to_string(val) + " outside [0, 1]";
  switch (spec.equation) {
    case Equation::LaplaceMixed: {
      if (spec.neumann.empty()) break;
      if (!in(s.dirichlet_range, 0.5, 1.0) || !in(s.neumann_range, 0.5, 1.0)) return "mixed range r outside [0.5, 1]";
      for (const auto& [v, val] : spec.dirichlet)
        if (val > s.dirichlet_range) return "Dirichlet value above r";
      for (const auto& [v, val] : spec.neumann)
        if (val > s.neumann_range) return "Neumann value above r";
      double total = 0.0, neu = 0.0;
      for (const auto& be : s.mesh.boundary_edges) {
        const double len = distance(s.mesh.vertices[be.v[0]], s.mesh.vertices[be.v[1]]);
        total += len;
        if (be.tag.kind == BoundaryKind::Neumann) neu += len;
      }
      if (!(neu > 0.0) || !(neu < 0.5 * total)) return "Neumann arc fraction not in (0, 1/2)";
      break;
    }
    case Equation::Darcy:
      if (!in(s.dirichlet_range, 0.3, 1.0)) return "Darcy range r outside [0.3, 1]";
      for (const auto& [v, val] : spec.dirichlet)
        if (val > s.dirichlet_range) return "Darcy boundary value above r";
      for (double a : spec.coeff_a)
        if (!in(a, kDarcyMinCoefficient, 1.0)) return "coefficient a outside [0.01, 1]";
      for (double f : spec.source_f)
        if (!in(f, 0.0, 1.0)) return "source f outside [0, 1]";
      break;
    case Equation::Heat:
      if (!in(spec.alpha, 0.8, 1.0)) return "alpha outside [0.8, 1]";
      if (spec.dt != kHeatDt) return "time step differs from 0.01";
      if (spec.n_steps != kHeatSteps) return "step count differs from 10";
      for (double u : spec.initial_u)
        if (!in(u, 0.0, 1.0)) return "initial value outside [0, 1]";
      for (const auto& m : spec.dirichlet_steps)
        for (const auto& [v, val] : m)
          if (!in(val, 0.0, 1.0)) return "Dirichlet value outside [0, 1]";
      break;
    default: break;
  }
  return {};
}

struct DatasetParams {
  Equation equation = Equation::LaplaceDirichlet;
  std::size_t n_shapes = 1;
  std::size_t samples_per_shape = 1;
  double target_edge_length = 0.05;
  std::uint64_t seed = 0;
  std::size_t n_min = 3;
  std::size_t n_max = 12;
  Box2 box{};
  std::size_t boundary_samples = 64;  // M
  Interval training_range{};
  std::size_t threads = 0;
};

struct Manifest {
  std::size_t count = 0;
  std::vector<Json> skipped;
  std::uint64_t seed = 0;
  Json params;
  std::string sha256;
  std::vector<std::string> records;
};

inline Json params_to_json(const DatasetParams& p) {
  return {{"equation", to_string(p.equation)},
          {"n_shapes", p.n_shapes},
          {"samples_per_shape", p.samples_per_shape},
          {"target_edge_length", p.target_edge_length},
          {"n_min", p.n_min},
          {"n_max", p.n_max},
          {"box", {p.box.lo.x, p.box.lo.y, p.box.hi.x, p.box.hi.y}},
          {"boundary_samples", p.boundary_samples},
          {"training_range", {p.training_range.lo, p.training_range.hi}}};
}

inline Json to_json(const Manifest& m) {
  return {{"count", m.count}, {"skipped", m.skipped}, {"seed", m.seed},
          {"params", m.params}, {"sha256", m.sha256},  {"records", m.records}};
}

/// One training record: raw problem and solution, the fitted normalizer, the
/// normalized problem and solution, and the boundary encoding of the
/// normalized problem (empty outside the surrogate scope).
inline Json make_record(const TriMesh& mesh, const ProblemSpec& spec, const Field& solution,
                        const DatasetParams& params) {
  SubMesh whole = extract_submesh(mesh, [&] {
    std::vector<Index> all(mesh.num_vertices());
    for (Index i = 0; i < all.size(); ++i) all[i] = i;
    return all;
  }());
  whole.mesh = mesh;
  const auto record = fit_normalizer(whole, spec, params.box, params.training_range);
  const auto [nmesh, nspec] = apply_forward(record, mesh, spec);
  Json j;
  j["mesh"] = to_json(mesh);
  j["spec"] = to_json(spec);
  j["solution"] = solution;
  j["normalizer"] = to_json(record);
  j["normalized"] = {{"mesh", to_json(nmesh)},
                     {"spec", to_json(nspec)},
                     {"solution", transform_solution(record, solution)}};
  bool pure_dirichlet = spec.equation == Equation::LaplaceDirichlet;
  Field enc;
  if (pure_dirichlet) enc = encode_boundary(nmesh, nspec, params.boundary_samples);
  j["boundary_encoding"] = enc;
  return j;
}

/// Writes one record per sample into out_dir plus manifest.json. Samples
/// whose solve fails are skipped and listed in the manifest.
inline Manifest generate_dataset(const DatasetParams& params, const std::string& out_dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec || !fs::is_directory(out_dir)) throw IoError("cannot create output directory '" + out_dir + "'");
  if (params.n_shapes == 0 || params.samples_per_shape == 0) throw ConfigError("dataset must be nonempty");

  const std::size_t total = params.n_shapes * params.samples_per_shape;
  std::vector<std::string> text(total);
  std::vector<std::string> failure(total);

  std::vector<TriMesh> meshes(params.n_shapes);
  parallel_for(params.n_shapes, resolve_threads(params.threads), [&](std::size_t i) {
    const auto poly = random_simple_polygon(params.n_min, params.n_max, params.box, detail::mix_seed(params.seed, i, 0));
    meshes[i] = triangulate(poly, params.target_edge_length);
  });

  parallel_for(total, resolve_threads(params.threads), [&](std::size_t idx) {
    const std::size_t i = idx / params.samples_per_shape, j = idx % params.samples_per_shape;
    try {
      const auto sample = sample_boundary(params.equation, meshes[i], detail::mix_seed(params.seed, i, j + 1));
      const Field u = solve_direct(sample.mesh, sample.spec);
      Json rec = make_record(sample.mesh, sample.spec, u, params);
      rec["shape"] = i;
      rec["sample"] = j;
      text[idx] = rec.dump();
    } catch (const Error& e) {
      failure[idx] = e.kind() + ": " + e.what();
    }
  });

  Manifest m;
  m.seed = params.seed;
  m.params = params_to_json(params);
  std::string all;
  for (std::size_t idx = 0; idx < total; ++idx) {
    if (!failure[idx].empty()) {
      warn("sample " + std::to_string(idx) + " skipped: " + failure[idx]);
      m.skipped.push_back({{"index", idx},
                           {"shape", idx / params.samples_per_shape},
                           {"sample", idx % params.samples_per_shape},
                           {"error", failure[idx]}});
      continue;
    }
    char name[32];
    std::snprintf(name, sizeof name, "record_%06zu.json", idx);
    write_text_file((fs::path(out_dir) / name).string(), text[idx]);
    m.records.emplace_back(name);
    all += text[idx];
    ++m.count;
  }
  m.sha256 = sha256_hex(all);
  write_json_file((fs::path(out_dir) / "manifest.json").string(), to_json(m));
  return m;
}

}  // namespace sni

#endif  // SNI_DATAGEN_HPP
