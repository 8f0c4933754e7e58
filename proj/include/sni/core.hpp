#ifndef SNI_CORE_HPP
#define SNI_CORE_HPP

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <iostream>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace sni {

using Index = std::size_t;

/// One scalar per mesh vertex (or per (step, vertex) pair, time-major).
using Field = std::vector<double>;

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend constexpr Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
  friend constexpr Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
  friend constexpr Point2 operator*(double s, Point2 a) { return {s * a.x, s * a.y}; }
  friend constexpr bool operator==(Point2 a, Point2 b) = default;
};

inline constexpr double dot(Point2 a, Point2 b) { return a.x * b.x + a.y * b.y; }
inline constexpr double cross(Point2 a, Point2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Point2 a) { return std::hypot(a.x, a.y); }
inline double distance(Point2 a, Point2 b) { return norm(a - b); }

/// Twice the signed area of (a, b, c); positive for counter-clockwise.
inline constexpr double orient2d(Point2 a, Point2 b, Point2 c) { return cross(b - a, c - a); }

struct Box2 {
  Point2 lo{-0.5, -0.5};
  Point2 hi{0.5, 0.5};

  double width() const { return hi.x - lo.x; }
  double height() const { return hi.y - lo.y; }
  Point2 center() const { return 0.5 * (lo + hi); }
  bool contains(Point2 p, double eps = 0.0) const {
    return p.x >= lo.x - eps && p.x <= hi.x + eps && p.y >= lo.y - eps && p.y <= hi.y + eps;
  }
};

struct Interval {
  double lo = 0.0;
  double hi = 1.0;
  double width() const { return hi - lo; }
};

// Errors. Every failure surfaces as an exception derived from sni::Error; the
// kind() string is the machine-parsable prefix used by the command line tool.

class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

#define SNI_DEFINE_ERROR(Name, tag)                                 \
  class Name : public Error {                                       \
   public:                                                          \
    explicit Name(const std::string& what) : Error(tag, what) {}    \
  };

SNI_DEFINE_ERROR(GenerationError, "generation")
SNI_DEFINE_ERROR(MeshingError, "meshing")
SNI_DEFINE_ERROR(MeshError, "mesh")
SNI_DEFINE_ERROR(SpecError, "specification")
SNI_DEFINE_ERROR(CoercivityError, "coercivity")
SNI_DEFINE_ERROR(PartitionError, "partition")
SNI_DEFINE_ERROR(MetricError, "metric")
SNI_DEFINE_ERROR(ConfigError, "config")
SNI_DEFINE_ERROR(TransformError, "transform")
SNI_DEFINE_ERROR(LoadError, "load")
SNI_DEFINE_ERROR(ConsistencyError, "consistency")
SNI_DEFINE_ERROR(SurrogateScopeError, "surrogate-scope")
SNI_DEFINE_ERROR(IoError, "io")

#undef SNI_DEFINE_ERROR

/// CG did not reach the requested residual.
class IterativeFailure : public Error {
 public:
  IterativeFailure(const std::string& what, double residual, std::size_t iterations)
      : Error("iterative", what), residual_(residual), iterations_(iterations) {}
  double residual() const noexcept { return residual_; }
  std::size_t iterations() const noexcept { return iterations_; }

 private:
  double residual_;
  std::size_t iterations_;
};

/// Picard iteration did not settle; carries the relative-change history.
class NonlinearFailure : public Error {
 public:
  NonlinearFailure(const std::string& what, std::vector<double> history)
      : Error("nonlinear", what), history_(std::move(history)) {}
  const std::vector<double>& history() const noexcept { return history_; }

 private:
  std::vector<double> history_;
};

/// A local solve failed inside a Schwarz step.
class LocalSolveError : public Error {
 public:
  LocalSolveError(std::size_t subdomain, const std::string& what)
      : Error("local-solve", "subdomain " + std::to_string(subdomain) + ": " + what),
        subdomain_(subdomain) {}
  std::size_t subdomain() const noexcept { return subdomain_; }

 private:
  std::size_t subdomain_;
};

/// Destination for non-fatal warnings; defaults to stderr. Tests and the
/// command line tool may replace it.
inline std::function<void(const std::string&)>& warning_sink() {
  static std::function<void(const std::string&)> sink = [](const std::string& msg) {
    std::cerr << "warning: " << msg << '\n';
  };
  return sink;
}

inline void warn(const std::string& msg) {
  if (warning_sink()) warning_sink()(msg);
}

// Small dense vector helpers shared by the numerical modules.

inline double norm2(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double diff_norm2(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

}  // namespace sni

#endif  // SNI_CORE_HPP
