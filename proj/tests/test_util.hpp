#ifndef SNI_TEST_UTIL_HPP
#define SNI_TEST_UTIL_HPP

#include <functional>

#include "sni/sni.hpp"

namespace sni::testing {

/// Pure Dirichlet Laplace problem on a grid with u_D = f(x, y).
inline ProblemSpec dirichlet_from(const TriMesh& mesh, Equation eq, const std::function<double(Point2)>& f) {
  ProblemSpec s;
  s.equation = eq;
  for (const auto& be : mesh.boundary_edges)
    for (Index v : be.v) s.dirichlet[v] = f(mesh.vertices[v]);
  return s;
}

inline Field sample(const TriMesh& mesh, const std::function<double(Point2)>& f) {
  Field u(mesh.num_vertices());
  for (Index i = 0; i < u.size(); ++i) u[i] = f(mesh.vertices[i]);
  return u;
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace sni::testing

#endif
