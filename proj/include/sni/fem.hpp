#ifndef SNI_FEM_HPP
#define SNI_FEM_HPP

#include <array>
#include <cmath>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "sni/core.hpp"
#include "sni/geometry.hpp"
#include "sni/sparse.hpp"

namespace sni {

enum class Equation { LaplaceDirichlet, LaplaceMixed, Darcy, Heat, NonlinearLaplace };

inline const char* to_string(Equation e) {
  switch (e) {
    case Equation::LaplaceDirichlet: return "LaplaceDirichlet";
    case Equation::LaplaceMixed: return "LaplaceMixed";
    case Equation::Darcy: return "Darcy";
    case Equation::Heat: return "Heat";
    case Equation::NonlinearLaplace: return "NonlinearLaplace";
  }
  return "?";
}

inline Equation parse_equation(std::string_view s) {
  for (auto e : {Equation::LaplaceDirichlet, Equation::LaplaceMixed, Equation::Darcy, Equation::Heat,
                 Equation::NonlinearLaplace})
    if (s == to_string(e)) return e;
  throw SpecError("unknown equation '" + std::string(s) + "'");
}

/// Boundary data and input fields of one boundary-value problem on a mesh.
/// All fields are piecewise linear, stored per vertex.
struct ProblemSpec {
  Equation equation = Equation::LaplaceDirichlet;
  /// u_D on every vertex of a Dirichlet (or artificial) boundary edge.
  std::map<Index, double> dirichlet;
  /// Flux g on every vertex of a Neumann boundary edge.
  std::map<Index, double> neumann;
  Field coeff_a;   // Darcy
  Field source_f;  // Darcy
  double alpha = 1.0;  // Heat
  Field initial_u;     // Heat
  std::size_t n_steps = 0;
  double dt = 0.0;
  /// Heat only: optional per-step Dirichlet data, index = step in [0, n_steps].
  std::vector<std::map<Index, double>> dirichlet_steps;

  const std::map<Index, double>& dirichlet_at_step(std::size_t step) const {
    return dirichlet_steps.empty() ? dirichlet : dirichlet_steps.at(step);
  }
};

struct SparseSystem {
  CsrMatrix<double> matrix;
  Field rhs;
  std::vector<char> dirichlet_mask;
};

inline constexpr double kCgTolerance = 1e-10;
inline constexpr double kPicardTolerance = 1e-10;
inline constexpr std::size_t kPicardMaxIterations = 100;

/// Throws SpecError / CoercivityError when the spec does not fit the mesh.
inline void validate_spec(const TriMesh& mesh, const ProblemSpec& spec) {
  const std::size_t n = mesh.num_vertices();
  auto check_keys = [n](const std::map<Index, double>& m, const char* what) {
    for (const auto& [v, val] : m) {
      if (v >= n) throw SpecError(std::string(what) + " vertex out of range");
      if (!std::isfinite(val)) throw SpecError(std::string(what) + " value is not finite");
    }
  };
  check_keys(spec.dirichlet, "dirichlet");
  check_keys(spec.neumann, "neumann");
  for (const auto& m : spec.dirichlet_steps) check_keys(m, "dirichlet_steps");

  const bool neumann_allowed = spec.equation == Equation::LaplaceMixed;
  for (const auto& be : mesh.boundary_edges) {
    if (be.tag.kind == BoundaryKind::Neumann) {
      if (!neumann_allowed)
        throw SpecError(std::string(to_string(spec.equation)) + " does not admit Neumann boundary edges");
      for (Index v : be.v)
        if (!spec.neumann.contains(v))
          throw SpecError("missing Neumann data at boundary vertex " + std::to_string(v));
    } else {
      for (Index v : be.v) {
        const bool covered = spec.equation == Equation::Heat && !spec.dirichlet_steps.empty()
                                 ? spec.dirichlet_steps.front().contains(v)
                                 : spec.dirichlet.contains(v);
        if (!covered) throw SpecError("missing Dirichlet data at boundary vertex " + std::to_string(v));
      }
    }
  }
  if (spec.dirichlet.empty() && spec.dirichlet_steps.empty())
    throw SpecError("problem has no Dirichlet boundary");

  switch (spec.equation) {
    case Equation::Darcy:
      if (spec.coeff_a.size() != n || spec.source_f.size() != n)
        throw SpecError("Darcy needs coeff_a and source_f per vertex");
      for (double a : spec.coeff_a)
        if (!(a > 0.0)) throw CoercivityError("coefficient a(x) must be positive");
      break;
    case Equation::Heat:
      if (!(spec.alpha > 0.0)) throw CoercivityError("diffusivity alpha must be positive");
      if (!(spec.dt > 0.0)) throw SpecError("time step must be positive");
      if (spec.initial_u.size() != n) throw SpecError("Heat needs initial_u per vertex");
      if (!spec.dirichlet_steps.empty() && spec.dirichlet_steps.size() != spec.n_steps + 1)
        throw SpecError("dirichlet_steps must hold n_steps + 1 entries");
      for (const auto& m : spec.dirichlet_steps)
        if (m.size() != spec.dirichlet_steps.front().size()) throw SpecError("dirichlet_steps vary in support");
      break;
    default: break;
  }
}

namespace detail {

struct ElementGeometry {
  double area;
  std::array<Point2, 3> grad;  // gradients of the three hat functions
};

inline ElementGeometry element_geometry(const TriMesh& mesh, const Triangle& t) {
  const Point2 p0 = mesh.vertices[t[0]], p1 = mesh.vertices[t[1]], p2 = mesh.vertices[t[2]];
  const double det = orient2d(p0, p1, p2);
  ElementGeometry g;
  g.area = 0.5 * det;
  g.grad[0] = {(p1.y - p2.y) / det, (p2.x - p1.x) / det};
  g.grad[1] = {(p2.y - p0.y) / det, (p0.x - p2.x) / det};
  g.grad[2] = {(p0.y - p1.y) / det, (p1.x - p0.x) / det};
  return g;
}

}  // namespace detail

/// Per-triangle diffusion coefficient: vertex average of a(x) for Darcy,
/// vertex average of (u^2 + 1) at the linearization point for NonlinearLaplace,
/// 1 otherwise.
inline std::vector<double> element_coefficients(const TriMesh& mesh, const ProblemSpec& spec,
                                                const Field* linearization) {
  std::vector<double> k(mesh.num_triangles(), 1.0);
  if (spec.equation == Equation::Darcy) {
    for (std::size_t t = 0; t < k.size(); ++t) {
      const auto& tri = mesh.triangles[t];
      k[t] = (spec.coeff_a[tri[0]] + spec.coeff_a[tri[1]] + spec.coeff_a[tri[2]]) / 3.0;
    }
  } else if (spec.equation == Equation::NonlinearLaplace) {
    if (linearization == nullptr) throw SpecError("NonlinearLaplace assembly needs a linearization point");
    if (linearization->size() != mesh.num_vertices()) throw SpecError("linearization point has wrong length");
    const Field& u = *linearization;
    for (std::size_t t = 0; t < k.size(); ++t) {
      const auto& tri = mesh.triangles[t];
      double s = 0.0;
      for (Index v : tri) s += u[v] * u[v] + 1.0;
      k[t] = s / 3.0;
    }
  }
  return k;
}

/// Weighted P1 stiffness and consistent mass, combined as
/// mass_weight * M + stiffness_weight * K(coeff).
inline CsrMatrix<double> assemble_operator(const TriMesh& mesh, std::span<const double> coeff,
                                           double stiffness_weight, double mass_weight) {
  std::vector<std::tuple<Index, Index, double>> trip;
  trip.reserve(9 * mesh.num_triangles());
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangles[t];
    const auto g = detail::element_geometry(mesh, tri);
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        double v = stiffness_weight * coeff[t] * g.area * dot(g.grad[i], g.grad[j]);
        if (mass_weight != 0.0) v += mass_weight * g.area * (i == j ? 2.0 : 1.0) / 12.0;
        trip.emplace_back(tri[i], tri[j], v);
      }
    }
  }
  return CsrMatrix<double>::from_triplets(mesh.num_vertices(), std::move(trip));
}

inline CsrMatrix<double> mass_matrix(const TriMesh& mesh) {
  const std::vector<double> unused(mesh.num_triangles(), 0.0);
  return assemble_operator(mesh, unused, 0.0, 1.0);
}

/// Boundary load of a piecewise-linear flux g integrated exactly against the
/// hat functions on every Neumann edge.
inline Field neumann_load(const TriMesh& mesh, const std::map<Index, double>& g) {
  Field b(mesh.num_vertices(), 0.0);
  for (const auto& be : mesh.boundary_edges) {
    if (be.tag.kind != BoundaryKind::Neumann) continue;
    const Index a = be.v[0], c = be.v[1];
    const double len = distance(mesh.vertices[a], mesh.vertices[c]);
    const double ga = g.at(a), gc = g.at(c);
    b[a] += len * (2.0 * ga + gc) / 6.0;
    b[c] += len * (ga + 2.0 * gc) / 6.0;
  }
  return b;
}

/// Unconstrained load vector (before Dirichlet elimination).
inline Field assemble_load(const TriMesh& mesh, const ProblemSpec& spec) {
  Field b = neumann_load(mesh, spec.neumann);
  if (spec.equation == Equation::Darcy) {
    const auto m = mass_matrix(mesh);
    const Field mf = m * std::span<const double>(spec.source_f);
    for (std::size_t i = 0; i < b.size(); ++i) b[i] += mf[i];
  } else if (spec.equation == Equation::Heat) {
    const auto m = mass_matrix(mesh);
    const Field mu = m * std::span<const double>(spec.initial_u);
    for (std::size_t i = 0; i < b.size(); ++i) b[i] += mu[i];
  }
  return b;
}

/// Symmetric Dirichlet elimination: constrained rows and columns are zeroed,
/// the diagonal set to 1, the rhs set to u_D and the coupling moved to the rhs.
inline SparseSystem eliminate_dirichlet(CsrMatrix<double> a, Field rhs, const std::map<Index, double>& dirichlet) {
  const std::size_t n = a.rows();
  SparseSystem sys;
  sys.dirichlet_mask.assign(n, 0);
  Field ud(n, 0.0);
  for (const auto& [v, val] : dirichlet) {
    sys.dirichlet_mask[v] = 1;
    ud[v] = val;
  }
  for (Index r = 0; r < n; ++r) {
    auto cols = a.row_cols(r);
    auto vals = a.row_vals(r);
    if (sys.dirichlet_mask[r]) {
      for (std::size_t k = 0; k < cols.size(); ++k) vals[k] = cols[k] == r ? 1.0 : 0.0;
      rhs[r] = ud[r];
      continue;
    }
    for (std::size_t k = 0; k < cols.size(); ++k) {
      if (sys.dirichlet_mask[cols[k]]) {
        rhs[r] -= vals[k] * ud[cols[k]];
        vals[k] = 0.0;
      }
    }
  }
  sys.matrix = std::move(a);
  sys.rhs = std::move(rhs);
  return sys;
}

/// P1 weak-form system with Dirichlet rows eliminated. For Heat this is the
/// first backward-Euler step (M + dt*alpha*K) u1 = M u0.
inline SparseSystem assemble(const TriMesh& mesh, const ProblemSpec& spec,
                             const std::optional<Field>& linearization_point = std::nullopt) {
  validate_spec(mesh, spec);
  const Field* lin = linearization_point ? &*linearization_point : nullptr;
  const auto coeff = element_coefficients(mesh, spec, lin);
  CsrMatrix<double> a = spec.equation == Equation::Heat
                            ? assemble_operator(mesh, coeff, spec.dt * spec.alpha, 1.0)
                            : assemble_operator(mesh, coeff, 1.0, 0.0);
  Field rhs = assemble_load(mesh, spec);
  return eliminate_dirichlet(std::move(a), std::move(rhs),
                             spec.equation == Equation::Heat ? spec.dirichlet_at_step(1) : spec.dirichlet);
}

/// CG on an assembled system; throws IterativeFailure carrying the achieved
/// residual when max_iter is exhausted.
inline Field solve_cg(const SparseSystem& system, double tol = kCgTolerance, std::size_t max_iter = 0,
                      std::span<const double> x0 = {}) {
  if (max_iter == 0) max_iter = 10 * system.matrix.rows() + 10;
  auto res = cg_iterate(system.matrix, system.rhs, tol, max_iter, x0);
  if (!res.converged)
    throw IterativeFailure("CG stopped at relative residual " + std::to_string(res.relative_residual),
                           res.relative_residual, res.iterations);
  return std::move(res.x);
}

namespace detail {

inline Field apply_dirichlet(Field u, const std::map<Index, double>& dirichlet) {
  for (const auto& [v, val] : dirichlet) u[v] = val;
  return u;
}

inline double relative_change(std::span<const double> next, std::span<const double> prev) {
  const double d = diff_norm2(next, prev);
  const double nn = norm2(next);
  if (d == 0.0) return 0.0;
  return d / (nn > 0.0 ? nn : 1e-300);
}

}  // namespace detail

/// Picard iteration for div((u^2 + 1) grad u) = 0, each linear solve done by
/// `linear_solve(system, warm_start)`.
template <typename LinearSolve>
Field picard_solve(const TriMesh& mesh, const ProblemSpec& spec, Field guess, LinearSolve&& linear_solve) {
  Field u = detail::apply_dirichlet(std::move(guess), spec.dirichlet);
  std::vector<double> history;
  for (std::size_t it = 0; it < kPicardMaxIterations; ++it) {
    Field next = linear_solve(mesh, u);
    const double change = detail::relative_change(next, u);
    history.push_back(change);
    u = std::move(next);
    if (change < kPicardTolerance) return u;
  }
  throw NonlinearFailure("Picard iteration did not converge in " + std::to_string(kPicardMaxIterations) +
                             " iterations",
                         std::move(history));
}

/// Backward-Euler rollout (M + dt*alpha*K) u^{s+1} = M u^s; returns the
/// (n_steps + 1) x n time-major series with step 0 = initial_u.
inline Field heat_rollout_cg(const TriMesh& mesh, const ProblemSpec& spec) {
  const std::size_t n = mesh.num_vertices();
  const std::vector<double> ones(mesh.num_triangles(), 1.0);
  const auto op = assemble_operator(mesh, ones, spec.dt * spec.alpha, 1.0);
  const auto mass = mass_matrix(mesh);
  Field series((spec.n_steps + 1) * n);
  std::copy(spec.initial_u.begin(), spec.initial_u.end(), series.begin());
  Field prev = spec.initial_u;
  for (std::size_t s = 1; s <= spec.n_steps; ++s) {
    Field rhs = mass * std::span<const double>(prev);
    const auto sys = eliminate_dirichlet(op, std::move(rhs), spec.dirichlet_at_step(s));
    prev = solve_cg(sys, kCgTolerance, 0, prev);
    std::copy(prev.begin(), prev.end(), series.begin() + static_cast<std::ptrdiff_t>(s * n));
  }
  return series;
}

/// Ground-truth global solve: assemble + CG for linear equations, Picard for
/// NonlinearLaplace, a backward-Euler rollout for Heat.
inline Field solve_direct(const TriMesh& mesh, const ProblemSpec& spec) {
  validate_spec(mesh, spec);
  switch (spec.equation) {
    case Equation::Heat:
      return heat_rollout_cg(mesh, spec);
    case Equation::NonlinearLaplace: {
      Field guess(mesh.num_vertices(), 0.0);
      return picard_solve(mesh, spec, std::move(guess), [&spec](const TriMesh& m, const Field& lin) {
        const auto sys = assemble(m, spec, lin);
        return solve_cg(sys, kCgTolerance, 0, lin);
      });
    }
    default:
      return solve_cg(assemble(mesh, spec));
  }
}

/// ||pred - truth||_2 / ||truth||_2.
inline double l2_relative_error(std::span<const double> pred, std::span<const double> truth) {
  if (pred.size() != truth.size()) throw MetricError("length mismatch");
  const double tn = norm2(truth);
  if (!(tn > 0.0)) throw MetricError("reference solution has zero norm");
  return diff_norm2(pred, truth) / tn;
}

/// Mean of the per-sample l2 relative errors.
inline double mean_l2_relative_error(const std::vector<Field>& pred, const std::vector<Field>& truth) {
  if (pred.size() != truth.size() || pred.empty()) throw MetricError("sample count mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) s += l2_relative_error(pred[i], truth[i]);
  return s / static_cast<double>(pred.size());
}

// ---------------------------------------------------------------------------
// Factorized operator with a fixed Dirichlet set, reused across solves that
// only change the Dirichlet values and the load. Used by the local solvers.
// ---------------------------------------------------------------------------

class DirichletFactorization {
 public:
  DirichletFactorization() = default;

  DirichletFactorization(const CsrMatrix<double>& a, std::vector<char> dirichlet_mask)
      : mask_(std::move(dirichlet_mask)) {
    const std::size_t n = a.rows();
    free_of_.assign(n, -1);
    for (Index i = 0; i < n; ++i)
      if (!mask_[i]) {
        free_of_[i] = static_cast<long>(free_.size());
        free_.push_back(i);
      }
    std::vector<Eigen::Triplet<double>> trip;
    coupling_.assign(free_.size(), {});
    for (std::size_t fi = 0; fi < free_.size(); ++fi) {
      const Index r = free_[fi];
      auto cols = a.row_cols(r);
      auto vals = a.row_vals(r);
      for (std::size_t k = 0; k < cols.size(); ++k) {
        if (mask_[cols[k]]) {
          if (vals[k] != 0.0) coupling_[fi].emplace_back(cols[k], vals[k]);
        } else {
          trip.emplace_back(static_cast<int>(fi), static_cast<int>(free_of_[cols[k]]), vals[k]);
        }
      }
    }
    if (!free_.empty()) {
      Eigen::SparseMatrix<double> aii(static_cast<Eigen::Index>(free_.size()), static_cast<Eigen::Index>(free_.size()));
      aii.setFromTriplets(trip.begin(), trip.end());
      auto ldlt = std::make_shared<Ldlt>(aii);
      if (ldlt->info() != Eigen::Success) throw CoercivityError("local operator is not positive definite");
      ldlt_ = std::move(ldlt);
    }
  }

  std::size_t size() const { return mask_.size(); }
  const std::vector<char>& dirichlet_mask() const { return mask_; }

  /// Solves with Dirichlet values taken from `boundary` at masked rows.
  Field solve(std::span<const double> load, std::span<const double> boundary) const {
    Field u(mask_.size());
    for (Index i = 0; i < mask_.size(); ++i)
      if (mask_[i]) u[i] = boundary[i];
    if (free_.empty()) return u;
    Eigen::VectorXd rhs(static_cast<Eigen::Index>(free_.size()));
    for (std::size_t fi = 0; fi < free_.size(); ++fi) {
      double s = load[free_[fi]];
      for (const auto& [c, v] : coupling_[fi]) s -= v * boundary[c];
      rhs[static_cast<Eigen::Index>(fi)] = s;
    }
    const Eigen::VectorXd x = ldlt_->solve(rhs);
    for (std::size_t fi = 0; fi < free_.size(); ++fi) u[free_[fi]] = x[static_cast<Eigen::Index>(fi)];
    return u;
  }

 private:
  std::vector<char> mask_;
  std::vector<Index> free_;
  std::vector<long> free_of_;
  std::vector<std::vector<std::pair<Index, double>>> coupling_;
  using Ldlt = Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>;
  std::shared_ptr<const Ldlt> ldlt_;
};

}  // namespace sni

#endif  // SNI_FEM_HPP
