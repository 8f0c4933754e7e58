#ifndef SNI_SURROGATE_HPP
#define SNI_SURROGATE_HPP

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"

#include "sni/core.hpp"
#include "sni/fem.hpp"
#include "sni/geometry.hpp"

namespace sni {

enum class Activation { Tanh, Identity };

struct DenseLayer {
  std::size_t in = 0;
  std::size_t out = 0;
  std::vector<double> w;  // out x in, row-major
  std::vector<double> b;  // out
  Activation act = Activation::Identity;

  void forward(std::span<const double> x, std::span<double> y) const {
    for (std::size_t i = 0; i < out; ++i) {
      double s = b[i];
      const double* row = w.data() + i * in;
      for (std::size_t j = 0; j < in; ++j) s += row[j] * x[j];
      y[i] = act == Activation::Tanh ? std::tanh(s) : s;
    }
  }
};

struct TrainingReport {
  double val_l2_rel = std::numeric_limits<double>::quiet_NaN();
  std::string dataset_hash;
};

/// Branch-trunk operator: value(x) = sum_i branch_i(b) * trunk_i(x) + output_bias.
struct SurrogateModel {
  std::size_t M = 64;
  std::size_t p = 64;
  std::vector<DenseLayer> branch;
  std::vector<DenseLayer> trunk;
  double output_bias = 0.0;
  TrainingReport training_report;
};

namespace detail {

inline Field run_mlp(const std::vector<DenseLayer>& layers, std::span<const double> x) {
  Field cur(x.begin(), x.end()), next;
  for (const auto& l : layers) {
    next.assign(l.out, 0.0);
    l.forward(cur, next);
    cur.swap(next);
  }
  return cur;
}

inline void check_chain(const std::vector<DenseLayer>& layers, std::size_t in, std::size_t p, const char* name) {
  if (layers.empty()) throw LoadError(std::string(name) + " has no layers");
  std::size_t width = in;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& l = layers[i];
    const std::string where = std::string(name) + " layer " + std::to_string(i);
    if (l.in != width)
      throw LoadError(where + ": expects input width " + std::to_string(l.in) + " but receives " +
                      std::to_string(width));
    if (l.w.size() != l.in * l.out || l.b.size() != l.out) throw LoadError(where + ": weight/bias shape mismatch");
    for (double v : l.w)
      if (!std::isfinite(v)) throw LoadError(where + ": non-finite weight");
    for (double v : l.b)
      if (!std::isfinite(v)) throw LoadError(where + ": non-finite bias");
    width = l.out;
  }
  if (width != p)
    throw LoadError(std::string(name) + " output width " + std::to_string(width) + " does not match p = " +
                    std::to_string(p));
}

inline std::vector<DenseLayer> parse_layers(const nlohmann::json& arr, const char* name) {
  if (!arr.is_array()) throw LoadError(std::string(name) + " must be an array");
  std::vector<DenseLayer> out;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const auto& j = arr[i];
    const std::string where = std::string(name) + " layer " + std::to_string(i);
    if (!j.contains("w") || !j.contains("b") || !j.contains("act")) throw LoadError(where + ": missing w, b or act");
    DenseLayer l;
    const auto& w = j.at("w");
    if (!w.is_array() || w.empty()) throw LoadError(where + ": w must be a nonempty 2D array");
    l.out = w.size();
    l.in = w[0].is_array() ? w[0].size() : 0;
    for (const auto& row : w) {
      if (!row.is_array() || row.size() != l.in) throw LoadError(where + ": ragged weight matrix");
      for (const auto& v : row) l.w.push_back(v.get<double>());
    }
    l.b = j.at("b").get<std::vector<double>>();
    const auto act = j.at("act").get<std::string>();
    if (act == "tanh")
      l.act = Activation::Tanh;
    else if (act == "id")
      l.act = Activation::Identity;
    else
      throw LoadError(where + ": unknown activation '" + act + "'");
    out.push_back(std::move(l));
  }
  return out;
}

inline nlohmann::json dump_layers(const std::vector<DenseLayer>& layers) {
  auto arr = nlohmann::json::array();
  for (const auto& l : layers) {
    auto w = nlohmann::json::array();
    for (std::size_t i = 0; i < l.out; ++i)
      w.push_back(std::vector<double>(l.w.begin() + static_cast<std::ptrdiff_t>(i * l.in),
                                      l.w.begin() + static_cast<std::ptrdiff_t>((i + 1) * l.in)));
    arr.push_back({{"w", w}, {"b", l.b}, {"act", l.act == Activation::Tanh ? "tanh" : "id"}});
  }
  return arr;
}

}  // namespace detail

inline void validate_model(const SurrogateModel& m) {
  if (m.M == 0 || m.p == 0) throw LoadError("M and p must be positive");
  detail::check_chain(m.branch, m.M, m.p, "branch");
  detail::check_chain(m.trunk, 2, m.p, "trunk");
  if (!std::isfinite(m.output_bias)) throw LoadError("output_bias is not finite");
}

inline SurrogateModel model_from_json(const nlohmann::json& j) {
  try {
    if (j.value("format_version", 0) != 1) throw LoadError("unsupported format_version");
    SurrogateModel m;
    m.M = j.at("M").get<std::size_t>();
    m.p = j.at("p").get<std::size_t>();
    m.branch = detail::parse_layers(j.at("branch"), "branch");
    m.trunk = detail::parse_layers(j.at("trunk"), "trunk");
    m.output_bias = j.value("output_bias", 0.0);
    if (j.contains("training_report")) {
      const auto& r = j.at("training_report");
      if (r.contains("val_l2_rel") && r.at("val_l2_rel").is_number()) m.training_report.val_l2_rel = r.at("val_l2_rel");
      m.training_report.dataset_hash = r.value("dataset_hash", "");
    }
    validate_model(m);
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(std::string("malformed weight file: ") + e.what());
  }
}

inline nlohmann::json model_to_json(const SurrogateModel& m) {
  nlohmann::json j;
  j["format_version"] = 1;
  j["M"] = m.M;
  j["p"] = m.p;
  j["branch"] = detail::dump_layers(m.branch);
  j["trunk"] = detail::dump_layers(m.trunk);
  j["output_bias"] = m.output_bias;
  nlohmann::json rep;
  rep["val_l2_rel"] = std::isfinite(m.training_report.val_l2_rel) ? nlohmann::json(m.training_report.val_l2_rel)
                                                                   : nlohmann::json(nullptr);
  rep["dataset_hash"] = m.training_report.dataset_hash;
  j["training_report"] = rep;
  return j;
}

inline SurrogateModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open weight file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw LoadError("'" + path + "' is not valid JSON: " + e.what());
  }
  return model_from_json(j);
}

inline void save_model(const SurrogateModel& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << model_to_json(m).dump();
}

/// Batch forward pass at query points (normalized coordinates).
inline Field evaluate(const SurrogateModel& m, std::span<const double> branch_input, std::span<const Point2> points) {
  if (branch_input.size() != m.M)
    throw SurrogateScopeError("branch input has length " + std::to_string(branch_input.size()) + ", model expects " +
                              std::to_string(m.M));
  const Field bvec = detail::run_mlp(m.branch, branch_input);
  Field out(points.size());
  for (std::size_t q = 0; q < points.size(); ++q) {
    const double xy[2] = {points[q].x, points[q].y};
    const Field t = detail::run_mlp(m.trunk, xy);
    double s = m.output_bias;
    for (std::size_t i = 0; i < m.p; ++i) s += bvec[i] * t[i];
    out[q] = s;
  }
  return out;
}

/// Oriented boundary loops (vertex sequences) of a mesh, following the
/// boundary edges head to tail.
inline std::vector<std::vector<Index>> boundary_loops(const TriMesh& mesh) {
  std::unordered_map<Index, Index> next;
  for (const auto& be : mesh.boundary_edges) next[be.v[0]] = be.v[1];
  std::vector<std::vector<Index>> loops;
  std::unordered_map<Index, char> seen;
  std::vector<Index> starts;
  for (const auto& be : mesh.boundary_edges) starts.push_back(be.v[0]);
  std::sort(starts.begin(), starts.end());
  for (Index s : starts) {
    if (seen[s]) continue;
    std::vector<Index> loop;
    Index v = s;
    while (!seen[v]) {
      seen[v] = 1;
      loop.push_back(v);
      auto it = next.find(v);
      if (it == next.end()) throw MeshError("open boundary chain at vertex " + std::to_string(v));
      v = it->second;
    }
    loops.push_back(std::move(loop));
  }
  return loops;
}

/// M Dirichlet samples at equal arc-length spacing along the outer boundary
/// loop, counter-clockwise from the vertex closest to angle 0 about the loop
/// centroid. Values are interpolated linearly along edges.
inline Field encode_boundary(const TriMesh& mesh, const ProblemSpec& spec, std::size_t m) {
  if (spec.equation != Equation::LaplaceDirichlet)
    throw SurrogateScopeError(std::string(to_string(spec.equation)) + " is outside the surrogate scope");
  for (const auto& be : mesh.boundary_edges)
    if (be.tag.kind == BoundaryKind::Neumann) throw SurrogateScopeError("local problem has Neumann edges");
  if (m == 0) throw SurrogateScopeError("M must be positive");

  const auto loops = boundary_loops(mesh);
  if (loops.empty()) throw MeshError("mesh has no boundary");
  auto loop_area = [&](const std::vector<Index>& l) {
    double a = 0.0;
    for (std::size_t i = 0; i < l.size(); ++i) a += cross(mesh.vertices[l[i]], mesh.vertices[l[(i + 1) % l.size()]]);
    return 0.5 * a;
  };
  const std::vector<Index>* outer = &loops.front();
  for (const auto& l : loops)
    if (loop_area(l) > loop_area(*outer)) outer = &l;
  const auto& loop = *outer;
  const std::size_t nl = loop.size();

  Point2 c{0.0, 0.0};
  for (Index v : loop) c = c + mesh.vertices[v];
  c = (1.0 / static_cast<double>(nl)) * c;
  std::size_t start = 0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < nl; ++i) {
    const Point2 d = mesh.vertices[loop[i]] - c;
    const double ang = std::abs(std::atan2(d.y, d.x));
    if (ang < best) {
      best = ang;
      start = i;
    }
  }

  std::vector<double> value(nl), cum(nl + 1, 0.0);
  for (std::size_t i = 0; i < nl; ++i) {
    const Index v = loop[(start + i) % nl];
    auto it = spec.dirichlet.find(v);
    if (it == spec.dirichlet.end()) throw SurrogateScopeError("boundary vertex without Dirichlet data");
    value[i] = it->second;
    cum[i + 1] = cum[i] + distance(mesh.vertices[v], mesh.vertices[loop[(start + i + 1) % nl]]);
  }
  const double total = cum[nl];
  Field out(m);
  std::size_t e = 0;
  for (std::size_t k = 0; k < m; ++k) {
    const double s = total * static_cast<double>(k) / static_cast<double>(m);
    while (e + 1 < nl && cum[e + 1] <= s) ++e;
    const double len = cum[e + 1] - cum[e];
    const double t = len > 0.0 ? (s - cum[e]) / len : 0.0;
    out[k] = (1.0 - t) * value[e] + t * value[(e + 1) % nl];
  }
  return out;
}

}  // namespace sni

#endif  // SNI_SURROGATE_HPP
