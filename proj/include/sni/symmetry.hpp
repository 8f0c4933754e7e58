#ifndef SNI_SYMMETRY_HPP
#define SNI_SYMMETRY_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <utility>

#include "sni/core.hpp"
#include "sni/fem.hpp"
#include "sni/geometry.hpp"

namespace sni {

/// Invertible symmetry transform of a boundary-value problem.
///
/// Coordinates: x' = s * R(theta) * (x + spatial_shift).
/// Values:      u' = value_scale * (sigma(s) * u + value_shift), where sigma is
/// the equation's spatial-scaling factor on the solution (1, s or s^2).
struct TransformRecord {
  Equation equation = Equation::LaplaceDirichlet;
  Point2 spatial_shift{0.0, 0.0};
  double spatial_rotation = 0.0;
  double spatial_scale = 1.0;
  double value_shift = 0.0;
  double value_scale = 1.0;

  bool is_identity() const {
    return spatial_shift == Point2{0.0, 0.0} && spatial_rotation == 0.0 && spatial_scale == 1.0 &&
           value_shift == 0.0 && value_scale == 1.0;
  }

  /// How the solution responds to the spatial scaling alone.
  double solution_factor() const {
    switch (equation) {
      case Equation::LaplaceMixed: return spatial_scale;
      case Equation::Darcy: return spatial_scale * spatial_scale;
      default: return 1.0;
    }
  }

  Point2 map_point(Point2 p) const {
    const Point2 q = p + spatial_shift;
    const double c = std::cos(spatial_rotation), s = std::sin(spatial_rotation);
    return spatial_scale * Point2{c * q.x - s * q.y, s * q.x + c * q.y};
  }

  double forward_value(double u) const { return value_scale * (solution_factor() * u + value_shift); }
  double inverse_value(double w) const { return (w / value_scale - value_shift) / solution_factor(); }
};

inline bool admits_value_transform(Equation e) { return e != Equation::NonlinearLaplace; }

/// Throws TransformError unless the record is invertible and lies in the
/// equation's symmetry group.
inline void check_admissible(const TransformRecord& r) {
  if (!(r.spatial_scale > 0.0) || !std::isfinite(r.spatial_scale))
    throw TransformError("spatial scale must be positive");
  if (r.value_scale == 0.0 || !std::isfinite(r.value_scale)) throw TransformError("value scale must be nonzero");
  if (!std::isfinite(r.value_shift) || !std::isfinite(r.spatial_rotation) || !std::isfinite(r.spatial_shift.x) ||
      !std::isfinite(r.spatial_shift.y))
    throw TransformError("transform parameters must be finite");
  if (!admits_value_transform(r.equation) && (r.value_shift != 0.0 || r.value_scale != 1.0))
    throw TransformError(std::string(to_string(r.equation)) + " admits no value shift or value scaling");
}

/// Transforms mesh coordinates and problem data. Returns the inputs unchanged
/// for the identity record.
inline std::pair<TriMesh, ProblemSpec> apply_forward(const TransformRecord& r, TriMesh mesh, ProblemSpec spec) {
  if (r.equation != spec.equation) throw TransformError("record equation does not match problem");
  check_admissible(r);
  if (r.is_identity()) return {std::move(mesh), std::move(spec)};

  for (auto& p : mesh.vertices) p = r.map_point(p);
  auto values = [&r](std::map<Index, double>& m) {
    for (auto& [v, val] : m) val = r.forward_value(val);
  };
  values(spec.dirichlet);
  for (auto& m : spec.dirichlet_steps) values(m);

  switch (spec.equation) {
    case Equation::LaplaceMixed:
      for (auto& [v, g] : spec.neumann) g *= r.value_scale;
      break;
    case Equation::Darcy:
      for (double& f : spec.source_f) f *= r.value_scale;
      break;
    case Equation::Heat:
      spec.alpha *= r.spatial_scale * r.spatial_scale;
      for (double& u0 : spec.initial_u) u0 = r.forward_value(u0);
      break;
    default: break;
  }
  return {std::move(mesh), std::move(spec)};
}

inline std::pair<SubMesh, ProblemSpec> apply_forward(const TransformRecord& r, SubMesh sub, ProblemSpec spec) {
  auto [mesh, out] = apply_forward(r, std::move(sub.mesh), std::move(spec));
  sub.mesh = std::move(mesh);
  return {std::move(sub), std::move(out)};
}

/// Maps a solution of the transformed problem back to the original one.
inline Field apply_inverse(const TransformRecord& r, Field w) {
  if (r.is_identity()) return w;
  for (double& x : w) x = r.inverse_value(x);
  return w;
}

/// The forward value map applied to a whole solution vector.
inline Field transform_solution(const TransformRecord& r, Field u) {
  if (r.is_identity()) return u;
  for (double& x : u) x = r.forward_value(x);
  return u;
}

namespace detail {

inline std::pair<double, double> dirichlet_range(const ProblemSpec& spec) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  auto scan = [&](const std::map<Index, double>& m) {
    for (const auto& [v, val] : m) {
      lo = std::min(lo, val);
      hi = std::max(hi, val);
    }
  };
  scan(spec.dirichlet);
  for (const auto& m : spec.dirichlet_steps) scan(m);
  return {lo, hi};
}

}  // namespace detail

/// Chooses a shift+scale normalization that maps the submesh into the
/// training box and its Dirichlet data into the training range, as far as
/// the equation's symmetries allow.
inline TransformRecord fit_normalizer(const SubMesh& sub, const ProblemSpec& spec, const Box2& training_box,
                                      const Interval& training_range) {
  if (sub.mesh.num_vertices() == 0) throw TransformError("empty submesh");
  const Box2 bb = sub.mesh.bbox();
  if (std::max(bb.width(), bb.height()) <= 0.0) throw TransformError("submesh has zero diameter");

  TransformRecord r;
  r.equation = spec.equation;

  const double tol = 1e-12 * std::max(1.0, std::max(training_box.width(), training_box.height()));
  const bool inside = training_box.contains(bb.lo, tol) && training_box.contains(bb.hi, tol);
  if (!inside) {
    double s = 1.0;
    if (spec.equation != Equation::NonlinearLaplace) {
      if (bb.width() > 0.0) s = std::min(s, training_box.width() / bb.width());
      if (bb.height() > 0.0) s = std::min(s, training_box.height() / bb.height());
    } else if (bb.width() > training_box.width() || bb.height() > training_box.height()) {
      warn("NonlinearLaplace subdomain larger than the training box; passed through unscaled");
    }
    r.spatial_scale = s;
    r.spatial_shift = (1.0 / s) * training_box.center() - bb.center();
  }

  // Darcy normalizes geometry only; NonlinearLaplace has no value symmetry.
  const bool value_fit = spec.equation == Equation::LaplaceDirichlet || spec.equation == Equation::LaplaceMixed ||
                         spec.equation == Equation::Heat;
  auto [lo, hi] = detail::dirichlet_range(spec);
  if (!std::isfinite(lo)) return r;
  const double sigma = r.solution_factor();
  lo *= sigma;
  hi *= sigma;
  const double rtol = 1e-12 * std::max(1.0, training_range.width());
  const bool in_range = lo >= training_range.lo - rtol && hi <= training_range.hi + rtol;
  if (in_range) return r;
  if (!value_fit) {
    if (spec.equation == Equation::NonlinearLaplace)
      warn("NonlinearLaplace boundary data outside the training range; passed through untransformed");
    return r;
  }
  double vs = 1.0;
  if (hi - lo > training_range.width()) vs = training_range.width() / (hi - lo);
  r.value_scale = vs;
  r.value_shift = training_range.lo / vs - lo;
  return r;
}

}  // namespace sni

#endif  // SNI_SYMMETRY_HPP
