#ifndef SNI_SCHWARZ_HPP
#define SNI_SCHWARZ_HPP

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sni/core.hpp"
#include "sni/decomp.hpp"
#include "sni/fem.hpp"
#include "sni/geometry.hpp"
#include "sni/parallel.hpp"
#include "sni/surrogate.hpp"
#include "sni/symmetry.hpp"

namespace sni {

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

enum class LocalSolverKind { Exact, Perturbed, Surrogate };

inline const char* to_string(LocalSolverKind k) {
  switch (k) {
    case LocalSolverKind::Exact: return "exact";
    case LocalSolverKind::Perturbed: return "perturbed";
    case LocalSolverKind::Surrogate: return "surrogate";
  }
  return "?";
}

struct LocalSolverSpec {
  LocalSolverKind kind = LocalSolverKind::Exact;
  double c = 0.0;               // Perturbed: relative injected norm
  std::uint64_t seed = 0;       // Perturbed
  std::string weights_path;     // Surrogate
  bool fallback_exact = true;   // Surrogate: out-of-scope subdomains use the exact solver
  Box2 training_box{};          // Surrogate normalization target
  Interval training_range{};

  static LocalSolverSpec exact() { return {}; }
  static LocalSolverSpec perturbed(double c, std::uint64_t seed) {
    if (!(c >= 0.0) || !std::isfinite(c)) throw ConfigError("perturbation level c must be >= 0");
    LocalSolverSpec s;
    s.kind = LocalSolverKind::Perturbed;
    s.c = c;
    s.seed = seed;
    return s;
  }
  static LocalSolverSpec surrogate(std::string path) {
    LocalSolverSpec s;
    s.kind = LocalSolverKind::Surrogate;
    s.weights_path = std::move(path);
    return s;
  }

  /// "exact", "perturbed:<c>:<seed>" or "surrogate:<weights>".
  static LocalSolverSpec parse(std::string_view text) {
    if (text == "exact") return exact();
    if (text.starts_with("perturbed:")) {
      const std::string rest(text.substr(10));
      const auto colon = rest.find(':');
      if (colon == std::string::npos) throw ConfigError("expected perturbed:<c>:<seed>");
      try {
        return perturbed(std::stod(rest.substr(0, colon)), std::stoull(rest.substr(colon + 1)));
      } catch (const std::logic_error&) {
        throw ConfigError("cannot parse '" + std::string(text) + "'");
      }
    }
    if (text.starts_with("surrogate:") && text.size() > 10) return surrogate(std::string(text.substr(10)));
    throw ConfigError("unknown local solver '" + std::string(text) + "'");
  }
};

/// Default stopping tolerance on the relative update: tight for the exact
/// solver, loose where solver noise dominates.
inline double default_outer_tol(LocalSolverKind kind) { return kind == LocalSolverKind::Exact ? 1e-8 : 1e-4; }

class SniConfig {
 public:
  SniConfig(std::size_t k, std::size_t depth, double tau, double outer_tol = 1e-8, std::size_t max_outer = 1000)
      : k_(k), depth_(depth), tau_(tau), outer_tol_(outer_tol), max_outer_(max_outer) {
    if (k == 0) throw ConfigError("K must be at least 1");
    if (!(tau > 0.0) || !(tau < 1.0 / static_cast<double>(k)))
      throw ConfigError("step size tau = " + std::to_string(tau) + " violates 0 < tau < 1/K = " +
                        std::to_string(1.0 / static_cast<double>(k)));
    if (!(outer_tol > 0.0)) throw ConfigError("outer_tol must be positive");
    if (max_outer < 1) throw ConfigError("max_outer must be at least 1");
  }

  std::size_t K() const { return k_; }
  std::size_t depth() const { return depth_; }
  double tau() const { return tau_; }
  double outer_tol() const { return outer_tol_; }
  std::size_t max_outer() const { return max_outer_; }

  LocalSolverSpec local_solver;
  /// Provided initial iterate; zero interior with u_D on the boundary if empty.
  std::optional<Field> initial_guess;
  std::uint64_t partition_seed = 0;
  /// 0 = SNI_THREADS or hardware concurrency.
  std::size_t threads = 0;
  /// Reference solution for the error history (not used for control unless
  /// oracle_stop > 0, in which case the run stops once the error reaches it).
  std::optional<Field> oracle;
  double oracle_stop = 0.0;

 private:
  std::size_t k_;
  std::size_t depth_;
  double tau_;
  double outer_tol_;
  std::size_t max_outer_;
};

// ---------------------------------------------------------------------------
// State and diagnostics
// ---------------------------------------------------------------------------

struct SniState {
  Field u;
  std::size_t iteration = 0;
  std::vector<double> update_norms;
  std::optional<double> rho_hat;
  bool converged = false;
};

/// Geometric mean of the last five successive update-norm ratios; needs at
/// least six recorded norms.
inline std::optional<double> estimate_rho(const std::vector<double>& norms) {
  constexpr std::size_t kWindow = 5;
  if (norms.size() < kWindow + 1) return std::nullopt;
  double log_sum = 0.0;
  for (std::size_t i = norms.size() - kWindow; i < norms.size(); ++i) {
    if (!(norms[i - 1] > 0.0) || !(norms[i] > 0.0)) return std::nullopt;
    log_sum += std::log(norms[i] / norms[i - 1]);
  }
  return std::exp(log_sum / static_cast<double>(kWindow));
}

struct Timings {
  double partition = 0.0;
  double local = 0.0;
  double update = 0.0;
};

struct Diagnostics {
  std::vector<double> update_norms;
  std::optional<double> rho_hat;
  std::size_t overlap_factor = 0;
  bool converged = false;
  std::size_t iterations = 0;
  Timings timings;
  /// l2 relative error vs the oracle after every iteration (empty without one).
  std::vector<double> errors;
  /// Largest injected perturbation norm (Perturbed solver).
  double c_abs_max = 0.0;
  std::vector<std::size_t> subdomain_sizes;
  /// Subdomains whose boundary splits into more than one Dirichlet-type or
  /// more than one Neumann arc.
  std::vector<std::size_t> fragmented_boundaries;
  std::string stop_reason;
};

struct SniResult {
  Field u;
  Diagnostics diagnostics;
  Decomposition decomposition;
};

// ---------------------------------------------------------------------------
// Local problems
// ---------------------------------------------------------------------------

struct LocalProblem {
  std::size_t k = 0;
  SubMesh submesh;
  ProblemSpec spec;
  /// Current iterate restricted to the subdomain (warm start for Picard).
  Field local_iterate;
};

namespace detail {

inline ProblemSpec local_spec(const SubMesh& sub, const ProblemSpec& global, std::span<const double> u) {
  ProblemSpec s;
  s.equation = global.equation;
  s.alpha = global.alpha;
  s.n_steps = global.n_steps;
  s.dt = global.dt;
  const auto& ids = sub.global_ids;
  for (Index i = 0; i < ids.size(); ++i) {
    switch (sub.roles[i]) {
      case VertexRole::GlobalDirichlet: {
        auto it = global.dirichlet.find(ids[i]);
        if (it == global.dirichlet.end())
          throw ConsistencyError("global Dirichlet vertex " + std::to_string(ids[i]) + " has no value");
        s.dirichlet[i] = it->second;
        break;
      }
      case VertexRole::Artificial: s.dirichlet[i] = u[ids[i]]; break;
      default: break;
    }
  }
  for (const auto& be : sub.mesh.boundary_edges) {
    if (be.tag.kind != BoundaryKind::Neumann) continue;
    for (Index v : be.v) {
      auto it = global.neumann.find(ids[v]);
      if (it == global.neumann.end())
        throw ConsistencyError("global Neumann vertex " + std::to_string(ids[v]) + " has no flux");
      s.neumann[v] = it->second;
    }
  }
  if (!global.coeff_a.empty()) s.coeff_a = restrict_to(global.coeff_a, ids);
  if (!global.source_f.empty()) s.source_f = restrict_to(global.source_f, ids);
  if (!global.initial_u.empty()) s.initial_u = restrict_to(global.initial_u, ids);
  return s;
}

/// Number of maximal same-type arcs on the submesh boundary, split into
/// (Dirichlet-type, Neumann).
inline std::pair<std::size_t, std::size_t> boundary_arcs(const SubMesh& sub) {
  std::unordered_map<Index, const BoundaryEdge*> out_edge;
  for (const auto& be : sub.mesh.boundary_edges) out_edge[be.v[0]] = &be;
  std::size_t dir = 0, neu = 0;
  std::unordered_map<Index, char> seen;
  for (const auto& be : sub.mesh.boundary_edges) {
    if (seen[be.v[0]]) continue;
    std::vector<bool> neumann;
    Index v = be.v[0];
    while (!seen[v]) {
      seen[v] = 1;
      auto it = out_edge.find(v);
      if (it == out_edge.end()) break;
      neumann.push_back(it->second->tag.kind == BoundaryKind::Neumann);
      v = it->second->v[1];
    }
    std::size_t changes = 0;
    for (std::size_t i = 0; i < neumann.size(); ++i)
      if (neumann[i] != neumann[(i + 1) % neumann.size()]) ++changes;
    if (changes == 0) {
      (neumann.front() ? neu : dir) += 1;
    } else {
      dir += changes / 2;
      neu += changes / 2;
    }
  }
  return {dir, neu};
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t k, std::uint64_t n) {
  auto splitmix = [](std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
  };
  return splitmix(splitmix(splitmix(seed) ^ k) ^ n);
}

inline double elapsed(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - since).count();
}

}  // namespace detail

/// Builds the local boundary-value problem of subdomain k from the iterate:
/// u_D on global Dirichlet vertices, g on global Neumann edges and the
/// current iterate on the artificial boundary.
inline LocalProblem form_local_problem(std::size_t k, const SniState& state, const ProblemSpec& global_spec,
                                       const Decomposition& decomposition, const TriMesh& mesh) {
  if (k >= decomposition.size()) throw ConsistencyError("subdomain index out of range");
  if (state.u.size() != mesh.num_vertices()) throw ConsistencyError("iterate length does not match mesh");
  LocalProblem p;
  p.k = k;
  p.submesh = extract_submesh(mesh, decomposition.parts[k]);
  p.spec = detail::local_spec(p.submesh, global_spec, state.u);
  p.local_iterate = restrict_to(state.u, p.submesh.global_ids);
  return p;
}

// ---------------------------------------------------------------------------
// Local solvers
// ---------------------------------------------------------------------------

/// Exact FEM local solver. Linear operators are factorized once per
/// subdomain and reused; only Dirichlet values change between iterations.
class ExactLocalSolver {
 public:
  explicit ExactLocalSolver(std::size_t k = 0) : cache_(k) {}

  Field solve(const LocalProblem& p) {
    const auto& mesh = p.submesh.mesh;
    const std::size_t n = mesh.num_vertices();
    Field boundary(n, 0.0);
    std::vector<char> mask(n, 0);
    for (const auto& [v, val] : p.spec.dirichlet) {
      mask[v] = 1;
      boundary[v] = val;
    }
    if (p.spec.equation == Equation::NonlinearLaplace) {
      Field guess = p.local_iterate.size() == n ? p.local_iterate : Field(n, 0.0);
      return picard_solve(mesh, p.spec, std::move(guess), [&](const TriMesh& m, const Field& lin) {
        const auto coeff = element_coefficients(m, p.spec, &lin);
        const DirichletFactorization f(assemble_operator(m, coeff, 1.0, 0.0), mask);
        const Field zero(n, 0.0);
        return f.solve(zero, boundary);
      });
    }
    if (p.spec.equation == Equation::Heat) throw SpecError("Heat local problems are solved by the space-time engine");

    Entry* e = p.k < cache_.size() ? &cache_[p.k] : nullptr;
    Entry fresh;
    if (e == nullptr) e = &fresh;
    if (!e->factor || e->factor->dirichlet_mask() != mask) {
      validate_spec(mesh, p.spec);
      const auto coeff = element_coefficients(mesh, p.spec, nullptr);
      e->factor = std::make_shared<DirichletFactorization>(assemble_operator(mesh, coeff, 1.0, 0.0), mask);
      e->load = assemble_load(mesh, p.spec);
    }
    return e->factor->solve(e->load, boundary);
  }

 private:
  struct Entry {
    std::shared_ptr<DirichletFactorization> factor;
    Field load;
  };
  std::vector<Entry> cache_;
};

/// Exact solve plus a seeded random perturbation of norm c * ||w_exact||_2,
/// zero on global Dirichlet vertices.
class PerturbedLocalSolver {
 public:
  PerturbedLocalSolver(std::size_t k, double c, std::uint64_t seed) : exact_(k), c_(c), seed_(seed) {}

  /// Returns (w, injected norm).
  std::pair<Field, double> solve(const LocalProblem& p, std::size_t iteration) {
    Field w = exact_.solve(p);
    if (c_ == 0.0) return {std::move(w), 0.0};
    std::mt19937_64 rng(detail::mix_seed(seed_, p.k, iteration));
    std::normal_distribution<double> normal;
    Field dir(w.size(), 0.0);
    for (Index i = 0; i < w.size(); ++i)
      if (p.submesh.roles[i] != VertexRole::GlobalDirichlet) dir[i] = normal(rng);
    const double dn = norm2(dir);
    const double target = c_ * norm2(w);
    if (dn == 0.0 || target == 0.0) return {std::move(w), 0.0};
    for (Index i = 0; i < w.size(); ++i) w[i] += target / dn * dir[i];
    return {std::move(w), target};
  }

 private:
  ExactLocalSolver exact_;
  double c_;
  std::uint64_t seed_;
};

/// Learned local operator wrapped in normalization and denormalization.
class SurrogateLocalSolver {
 public:
  SurrogateLocalSolver(std::size_t k, const LocalSolverSpec& spec)
      : model_(load_model(spec.weights_path)), spec_(spec), exact_(k) {}
  SurrogateLocalSolver(std::size_t k, SurrogateModel model, const LocalSolverSpec& spec)
      : model_(std::move(model)), spec_(spec), exact_(k) {}

  Field solve(const LocalProblem& p) {
    bool in_scope = p.spec.equation == Equation::LaplaceDirichlet;
    for (const auto& be : p.submesh.mesh.boundary_edges)
      if (be.tag.kind == BoundaryKind::Neumann) in_scope = false;
    if (!in_scope) {
      if (spec_.fallback_exact) return exact_.solve(p);
      throw SurrogateScopeError("subdomain " + std::to_string(p.k) + " is not a pure Dirichlet Laplace problem");
    }
    const auto record = fit_normalizer(p.submesh, p.spec, spec_.training_box, spec_.training_range);
    const auto [mesh, spec] = apply_forward(record, p.submesh.mesh, p.spec);
    const Field enc = encode_boundary(mesh, spec, model_.M);
    Field w = apply_inverse(record, evaluate(model_, enc, mesh.vertices));
    for (const auto& [v, val] : p.spec.dirichlet) w[v] = val;
    return w;
  }

  const SurrogateModel& model() const { return model_; }

 private:
  SurrogateModel model_;
  LocalSolverSpec spec_;
  ExactLocalSolver exact_;
};

/// One-off local solve. Exact solves go through the direct FEM solver.
inline Field local_solve(const LocalProblem& p, const LocalSolverSpec& solver, std::size_t iteration = 0) {
  switch (solver.kind) {
    case LocalSolverKind::Exact: {
      if (p.spec.equation == Equation::NonlinearLaplace) {
        ExactLocalSolver s;
        return s.solve(p);
      }
      return solve_direct(p.submesh.mesh, p.spec);
    }
    case LocalSolverKind::Perturbed: {
      PerturbedLocalSolver s(0, solver.c, solver.seed);
      return s.solve(p, iteration).first;
    }
    case LocalSolverKind::Surrogate: {
      SurrogateLocalSolver s(0, solver);
      return s.solve(p);
    }
  }
  throw ConfigError("unknown local solver");
}

// ---------------------------------------------------------------------------
// The SNI engine
// ---------------------------------------------------------------------------

/// Holds the decomposition, submeshes and local-solver caches for repeated
/// Schwarz steps on one problem.
class SniEngine {
 public:
  SniEngine(const SniConfig& config, const TriMesh& mesh, const ProblemSpec& spec,
            std::optional<Decomposition> decomposition = std::nullopt)
      : config_(config), mesh_(mesh), spec_(spec) {
    const auto t0 = std::chrono::steady_clock::now();
    validate_spec(mesh, spec);
    if (spec.equation == Equation::Heat) throw SpecError("use the space-time engine for Heat");
    if (decomposition) {
      decomp_ = std::move(*decomposition);
    } else {
      const auto g = build_adjacency(mesh);
      decomp_ = extend(g, partition(g, config.K(), config.partition_seed), config.depth());
    }
    if (decomp_.size() != config.K())
      throw ConfigError("decomposition has " + std::to_string(decomp_.size()) + " parts, config expects K = " +
                        std::to_string(config.K()));
    for (const auto& part : decomp_.parts) subs_.push_back(extract_submesh(mesh, part));
    check_coverage();
    for (std::size_t k = 0; k < subs_.size(); ++k) {
      const auto [dir, neu] = detail::boundary_arcs(subs_[k]);
      if (neu > 0 && (dir > 1 || neu > 1)) fragmented_.push_back(k);
    }
    dirichlet_mask_.assign(mesh.num_vertices(), 0);
    for (const auto& [v, val] : spec.dirichlet) dirichlet_mask_[v] = 1;

    const std::size_t k = decomp_.size();
    switch (config.local_solver.kind) {
      case LocalSolverKind::Exact: exact_ = std::make_unique<ExactLocalSolver>(k); break;
      case LocalSolverKind::Perturbed:
        perturbed_ = std::make_unique<PerturbedLocalSolver>(k, config.local_solver.c, config.local_solver.seed);
        break;
      case LocalSolverKind::Surrogate:
        try {
          surrogate_ = std::make_unique<SurrogateLocalSolver>(k, config.local_solver);
        } catch (const LoadError& e) {
          throw ConfigError(std::string("surrogate weights: ") + e.what());
        }
        if (!fragmented_.empty())
          warn(std::to_string(fragmented_.size()) + " subdomain(s) have fragmented Dirichlet/Neumann boundaries");
        break;
    }
    partition_time_ = detail::elapsed(t0);
  }

  const Decomposition& decomposition() const { return decomp_; }
  const std::vector<SubMesh>& submeshes() const { return subs_; }
  const SniConfig& config() const { return config_; }
  double partition_time() const { return partition_time_; }
  double c_abs_max() const { return c_abs_max_; }
  const Timings& timings() const { return timings_; }
  const std::vector<std::size_t>& fragmented_boundaries() const { return fragmented_; }

  /// u^0: provided iterate or zero interior, with u_D pinned either way.
  SniState initial_state() const {
    SniState s;
    if (config_.initial_guess) {
      if (config_.initial_guess->size() != mesh_.num_vertices())
        throw ConfigError("initial guess has wrong length");
      s.u = *config_.initial_guess;
    } else {
      s.u.assign(mesh_.num_vertices(), 0.0);
    }
    for (const auto& [v, val] : spec_.dirichlet) s.u[v] = val;
    return s;
  }

  LocalProblem local_problem(std::size_t k, std::span<const double> u) const {
    LocalProblem p;
    p.k = k;
    p.submesh = subs_[k];
    p.spec = detail::local_spec(p.submesh, spec_, u);
    p.local_iterate = restrict_to(u, p.submesh.global_ids);
    return p;
  }

  /// u^{n+1} = u^n + tau * sum_k R_k^T (w_k - R_k u^n), all local solves from
  /// the same u^n, summed in ascending k.
  void step(SniState& state) {
    const std::size_t k = subs_.size();
    std::vector<Field> w(k);
    std::vector<double> injected(k, 0.0);
    auto t0 = std::chrono::steady_clock::now();
    const std::size_t iteration = state.iteration;
    parallel_for(k, resolve_threads(config_.threads), [&](std::size_t i) {
      try {
        const LocalProblem p = local_problem(i, state.u);
        switch (config_.local_solver.kind) {
          case LocalSolverKind::Exact: w[i] = exact_->solve(p); break;
          case LocalSolverKind::Perturbed: std::tie(w[i], injected[i]) = perturbed_->solve(p, iteration); break;
          case LocalSolverKind::Surrogate: w[i] = surrogate_->solve(p); break;
        }
      } catch (const LocalSolveError&) {
        throw;
      } catch (const std::exception& e) {
        throw LocalSolveError(i, e.what());
      }
    });
    timings_.local += detail::elapsed(t0);

    t0 = std::chrono::steady_clock::now();
    Field next = state.u;
    const double tau = config_.tau();
    for (std::size_t i = 0; i < k; ++i) {
      const auto& ids = subs_[i].global_ids;
      for (Index j = 0; j < ids.size(); ++j) next[ids[j]] += tau * (w[i][j] - state.u[ids[j]]);
      c_abs_max_ = std::max(c_abs_max_, injected[i]);
    }
    for (const auto& [v, val] : spec_.dirichlet) next[v] = val;
    const double dn = diff_norm2(next, state.u);
    const double rel = dn / std::max(norm2(next), 1e-12);
    state.u = std::move(next);
    state.update_norms.push_back(dn);
    state.rho_hat = estimate_rho(state.update_norms);
    ++state.iteration;
    state.converged = rel < config_.outer_tol();
    timings_.update += detail::elapsed(t0);
  }

  SniResult run() {
    SniResult res;
    SniState state = initial_state();
    auto& d = res.diagnostics;
    const bool track = config_.oracle.has_value();
    if (track && config_.oracle->size() != mesh_.num_vertices()) throw ConfigError("oracle has wrong length");
    d.stop_reason = "max_outer";
    while (state.iteration < config_.max_outer()) {
      step(state);
      if (track) {
        d.errors.push_back(l2_relative_error(state.u, *config_.oracle));
        if (config_.oracle_stop > 0.0 && d.errors.back() <= config_.oracle_stop) {
          d.stop_reason = "oracle_target";
          break;
        }
      }
      if (state.converged) {
        d.stop_reason = "outer_tol";
        break;
      }
    }
    d.update_norms = state.update_norms;
    d.rho_hat = state.rho_hat;
    d.overlap_factor = decomp_.overlap_factor;
    d.converged = state.converged || d.stop_reason == "oracle_target";
    d.iterations = state.iteration;
    d.timings = timings_;
    d.timings.partition = partition_time_;
    d.c_abs_max = c_abs_max_;
    for (const auto& s : subs_) d.subdomain_sizes.push_back(s.num_vertices());
    d.fragmented_boundaries = fragmented_;
    res.u = std::move(state.u);
    res.decomposition = decomp_;
    return res;
  }

 private:
  // Every non-Dirichlet vertex must be a free unknown of some local problem,
  // otherwise the iteration can never change it.
  void check_coverage() const {
    std::vector<char> updated(mesh_.num_vertices(), 0);
    std::vector<char> parent_boundary_dirichlet(mesh_.num_vertices(), 0);
    for (const auto& be : mesh_.boundary_edges)
      if (be.tag.kind != BoundaryKind::Neumann) parent_boundary_dirichlet[be.v[0]] = parent_boundary_dirichlet[be.v[1]] = 1;
    for (const auto& s : subs_)
      for (Index i = 0; i < s.num_vertices(); ++i)
        if (s.roles[i] == VertexRole::Interior || s.roles[i] == VertexRole::GlobalNeumann) updated[s.global_ids[i]] = 1;
    for (Index v = 0; v < mesh_.num_vertices(); ++v)
      if (!updated[v] && !parent_boundary_dirichlet[v])
        throw ConsistencyError("vertex " + std::to_string(v) +
                               " is not a free unknown of any subdomain (increase the overlap depth)");
  }

  SniConfig config_;
  const TriMesh& mesh_;
  const ProblemSpec& spec_;
  Decomposition decomp_;
  std::vector<SubMesh> subs_;
  std::vector<std::size_t> fragmented_;
  std::vector<char> dirichlet_mask_;
  std::unique_ptr<ExactLocalSolver> exact_;
  std::unique_ptr<PerturbedLocalSolver> perturbed_;
  std::unique_ptr<SurrogateLocalSolver> surrogate_;
  double partition_time_ = 0.0;
  double c_abs_max_ = 0.0;
  Timings timings_;
};

/// One Schwarz step on an explicit decomposition.
inline SniState sni_step(SniState state, const SniConfig& config, const Decomposition& decomposition,
                         const ProblemSpec& global_spec, const TriMesh& mesh) {
  if (state.u.size() != mesh.num_vertices()) throw ConsistencyError("iterate length does not match mesh");
  SniEngine engine(config, mesh, global_spec, decomposition);
  engine.step(state);
  return state;
}

/// Full SNI loop: decomposition, initialization, iteration to outer_tol or
/// max_outer. Non-convergence is reported through diagnostics.converged.
inline SniResult sni_run(const SniConfig& config, const TriMesh& mesh, const ProblemSpec& global_spec) {
  SniEngine engine(config, mesh, global_spec);
  return engine.run();
}

// ---------------------------------------------------------------------------
// Space-time Schwarz for Heat
// ---------------------------------------------------------------------------

struct TimeWindow {
  std::size_t first = 1;  // first unknown step (>= 1)
  std::size_t last = 1;   // inclusive
};

/// K_temporal windows over steps 1..n_steps, each extended by delta_t steps on
/// both sides and clipped.
inline std::vector<TimeWindow> time_windows(std::size_t n_steps, std::size_t k_temporal, std::size_t delta_t) {
  if (k_temporal == 0) throw ConfigError("K_temporal must be at least 1");
  if (n_steps == 0 || n_steps % k_temporal != 0)
    throw ConfigError("K_temporal = " + std::to_string(k_temporal) + " does not divide n_steps = " +
                      std::to_string(n_steps));
  const std::size_t len = n_steps / k_temporal;
  std::vector<TimeWindow> out;
  for (std::size_t j = 0; j < k_temporal; ++j) {
    const std::size_t a = j * len + 1, b = (j + 1) * len;
    out.push_back({a > delta_t ? std::max<std::size_t>(1, a - delta_t) : 1, std::min(n_steps, b + delta_t)});
  }
  return out;
}

/// Additive Schwarz over (spatial part) x (time window) blocks of the
/// backward-Euler space-time system. Unknowns are time-major (step, vertex);
/// step 0 stays at u_0.
inline SniResult sni_run_spacetime(const SniConfig& config, const TriMesh& mesh, const ProblemSpec& heat_spec,
                                   std::size_t k_spatial, std::size_t k_temporal, std::size_t delta_t) {
  const auto t_setup = std::chrono::steady_clock::now();
  if (heat_spec.equation != Equation::Heat) throw SpecError("space-time Schwarz needs a Heat problem");
  validate_spec(mesh, heat_spec);
  if (k_spatial * k_temporal != config.K())
    throw ConfigError("config K = " + std::to_string(config.K()) + " differs from K_spatial * K_temporal = " +
                      std::to_string(k_spatial * k_temporal));
  if (config.local_solver.kind == LocalSolverKind::Surrogate)
    throw ConfigError("the surrogate local solver does not cover Heat");

  const std::size_t n = mesh.num_vertices();
  const std::size_t steps = heat_spec.n_steps;
  const auto windows = time_windows(steps, k_temporal, delta_t);
  const auto g = build_adjacency(mesh);
  Decomposition decomp = extend(g, partition(g, k_spatial, config.partition_seed), config.depth());
  std::vector<SubMesh> subs;
  for (const auto& part : decomp.parts) subs.push_back(extract_submesh(mesh, part));

  // Global Dirichlet vertices; their per-step values.
  std::vector<char> pinned(n, 0);
  for (const auto& [v, val] : heat_spec.dirichlet_at_step(0)) pinned[v] = 1;
  for (const auto& be : mesh.boundary_edges) {
    if (!pinned[be.v[0]] || !pinned[be.v[1]]) throw SpecError("Heat boundary must be fully Dirichlet");
  }

  // Per spatial subdomain: factorized (M + dt alpha K) with local Dirichlet
  // set = global Dirichlet + artificial vertices, and the local mass matrix.
  struct Local {
    std::shared_ptr<DirichletFactorization> factor;
    CsrMatrix<double> mass;
  };
  std::vector<Local> locals(subs.size());
  for (std::size_t i = 0; i < subs.size(); ++i) {
    const auto& sm = subs[i].mesh;
    const std::vector<double> ones(sm.num_triangles(), 1.0);
    std::vector<char> mask(sm.num_vertices(), 0);
    for (Index j = 0; j < sm.num_vertices(); ++j)
      mask[j] = subs[i].roles[j] == VertexRole::GlobalDirichlet || subs[i].roles[j] == VertexRole::Artificial;
    locals[i].factor = std::make_shared<DirichletFactorization>(
        assemble_operator(sm, ones, heat_spec.dt * heat_spec.alpha, 1.0), std::move(mask));
    locals[i].mass = mass_matrix(sm);
  }

  auto pin = [&](Field& u) {
    std::copy(heat_spec.initial_u.begin(), heat_spec.initial_u.end(), u.begin());
    for (std::size_t s = 1; s <= steps; ++s)
      for (const auto& [v, val] : heat_spec.dirichlet_at_step(s)) u[s * n + v] = val;
  };

  SniResult res;
  auto& d = res.diagnostics;
  d.timings.partition = detail::elapsed(t_setup);

  Field u((steps + 1) * n, 0.0);
  if (config.initial_guess) {
    if (config.initial_guess->size() != u.size()) throw ConfigError("initial guess has wrong length");
    u = *config.initial_guess;
  }
  pin(u);
  const bool track = config.oracle.has_value();
  if (track && config.oracle->size() != u.size()) throw ConfigError("oracle has wrong length");

  const std::size_t nblocks = subs.size() * windows.size();
  std::vector<std::size_t> cover(u.size(), 0);
  for (std::size_t i = 0; i < subs.size(); ++i)
    for (const auto& win : windows)
      for (std::size_t s = win.first; s <= win.last; ++s)
        for (Index gid : subs[i].global_ids) ++cover[s * n + gid];
  d.overlap_factor = *std::max_element(cover.begin() + static_cast<std::ptrdiff_t>(n), cover.end());

  std::vector<double> injected(nblocks, 0.0);
  std::vector<double> norms;
  bool converged = false;
  d.stop_reason = "max_outer";
  std::size_t it = 0;
  while (it < config.max_outer()) {
    auto t0 = std::chrono::steady_clock::now();
    std::vector<Field> w(nblocks);
    parallel_for(nblocks, resolve_threads(config.threads), [&](std::size_t b) {
      const std::size_t i = b / windows.size(), j = b % windows.size();
      try {
        const auto& sub = subs[i];
        const auto& win = windows[j];
        const std::size_t nl = sub.num_vertices();
        Field prev(nl);
        for (Index l = 0; l < nl; ++l) prev[l] = u[(win.first - 1) * n + sub.global_ids[l]];
        Field out((win.last - win.first + 1) * nl);
        Field boundary(nl, 0.0);
        for (std::size_t s = win.first; s <= win.last; ++s) {
          const auto& ud = heat_spec.dirichlet_at_step(s);
          for (Index l = 0; l < nl; ++l) {
            if (sub.roles[l] == VertexRole::GlobalDirichlet)
              boundary[l] = ud.at(sub.global_ids[l]);
            else if (sub.roles[l] == VertexRole::Artificial)
              boundary[l] = u[s * n + sub.global_ids[l]];
          }
          const Field load = locals[i].mass * std::span<const double>(prev);
          prev = locals[i].factor->solve(load, boundary);
          std::copy(prev.begin(), prev.end(), out.begin() + static_cast<std::ptrdiff_t>((s - win.first) * nl));
        }
        if (config.local_solver.kind == LocalSolverKind::Perturbed && config.local_solver.c > 0.0) {
          std::mt19937_64 rng(detail::mix_seed(config.local_solver.seed, b, it));
          std::normal_distribution<double> normal;
          Field dir(out.size(), 0.0);
          for (std::size_t s = win.first; s <= win.last; ++s)
            for (Index l = 0; l < nl; ++l)
              if (sub.roles[l] != VertexRole::GlobalDirichlet) dir[(s - win.first) * nl + l] = normal(rng);
          const double dn = norm2(dir), target = config.local_solver.c * norm2(out);
          if (dn > 0.0)
            for (std::size_t q = 0; q < out.size(); ++q) out[q] += target / dn * dir[q];
          injected[b] = target;
        }
        w[b] = std::move(out);
      } catch (const std::exception& e) {
        throw LocalSolveError(b, e.what());
      }
    });
    d.timings.local += detail::elapsed(t0);

    t0 = std::chrono::steady_clock::now();
    Field next = u;
    for (std::size_t b = 0; b < nblocks; ++b) {
      const std::size_t i = b / windows.size(), j = b % windows.size();
      const auto& ids = subs[i].global_ids;
      const auto& win = windows[j];
      for (std::size_t s = win.first; s <= win.last; ++s)
        for (Index l = 0; l < ids.size(); ++l) {
          const std::size_t q = s * n + ids[l];
          next[q] += config.tau() * (w[b][(s - win.first) * ids.size() + l] - u[q]);
        }
      d.c_abs_max = std::max(d.c_abs_max, injected[b]);
    }
    pin(next);
    const double dn = diff_norm2(next, u);
    const double rel = dn / std::max(norm2(next), 1e-12);
    u = std::move(next);
    norms.push_back(dn);
    ++it;
    d.timings.update += detail::elapsed(t0);
    if (track) {
      d.errors.push_back(l2_relative_error(u, *config.oracle));
      if (config.oracle_stop > 0.0 && d.errors.back() <= config.oracle_stop) {
        d.stop_reason = "oracle_target";
        converged = true;
        break;
      }
    }
    if (rel < config.outer_tol()) {
      d.stop_reason = "outer_tol";
      converged = true;
      break;
    }
  }
  d.update_norms = std::move(norms);
  d.rho_hat = estimate_rho(d.update_norms);
  d.converged = converged;
  d.iterations = it;
  for (const auto& s : subs) d.subdomain_sizes.push_back(s.num_vertices());
  res.u = std::move(u);
  res.decomposition = std::move(decomp);
  return res;
}

}  // namespace sni

#endif  // SNI_SCHWARZ_HPP
