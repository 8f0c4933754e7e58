#ifndef SNI_IO_HPP
#define SNI_IO_HPP

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>

#include <openssl/evp.h>

#include "json.hpp"

#include "sni/decomp.hpp"
#include "sni/fem.hpp"
#include "sni/geometry.hpp"
#include "sni/schwarz.hpp"
#include "sni/symmetry.hpp"

namespace sni {

using Json = nlohmann::json;

inline Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  try {
    Json j;
    in >> j;
    return j;
  } catch (const Json::exception& e) {
    throw IoError("'" + path + "' is not valid JSON: " + e.what());
  }
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << text;
  if (!out) throw IoError("write to '" + path + "' failed");
}

inline void write_json_file(const std::string& path, const Json& j) { write_text_file(path, j.dump()); }

inline std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw IoError("SHA-256 computation failed");
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return os.str();
}

// Mesh ---------------------------------------------------------------------

inline std::string tag_to_string(const BoundaryTag& t) {
  std::string kind = t.kind == BoundaryKind::Dirichlet ? "dirichlet" : t.kind == BoundaryKind::Neumann ? "neumann" : "artificial";
  return kind + ":" + std::to_string(t.segment);
}

inline BoundaryTag tag_from_string(const std::string& s) {
  const auto colon = s.find(':');
  const std::string kind = s.substr(0, colon);
  BoundaryTag t;
  if (kind == "dirichlet")
    t.kind = BoundaryKind::Dirichlet;
  else if (kind == "neumann")
    t.kind = BoundaryKind::Neumann;
  else if (kind == "artificial")
    t.kind = BoundaryKind::Artificial;
  else
    throw IoError("unknown boundary tag '" + s + "'");
  if (colon != std::string::npos) {
    try {
      t.segment = std::stoi(s.substr(colon + 1));
    } catch (const std::logic_error&) {
      throw IoError("bad segment in boundary tag '" + s + "'");
    }
  }
  return t;
}

inline Json to_json(const TriMesh& m) {
  Json j;
  auto v = Json::array();
  for (const auto& p : m.vertices) v.push_back({p.x, p.y});
  j["vertices"] = std::move(v);
  j["triangles"] = m.triangles;
  auto b = Json::array();
  for (const auto& be : m.boundary_edges) b.push_back({{"v", be.v}, {"tag", tag_to_string(be.tag)}});
  j["boundary_edges"] = std::move(b);
  return j;
}

inline TriMesh mesh_from_json(const Json& j) {
  try {
    TriMesh m;
    for (const auto& p : j.at("vertices")) m.vertices.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
    m.triangles = j.at("triangles").get<std::vector<Triangle>>();
    for (const auto& be : j.at("boundary_edges"))
      m.boundary_edges.push_back({be.at("v").get<std::array<Index, 2>>(), tag_from_string(be.at("tag"))});
    m.validate();
    return m;
  } catch (const Json::exception& e) {
    throw IoError(std::string("malformed mesh JSON: ") + e.what());
  }
}

// Problem ------------------------------------------------------------------

namespace detail {

inline Json pairs_to_json(const std::map<Index, double>& m) {
  auto a = Json::array();
  for (const auto& [v, val] : m) a.push_back({v, val});
  return a;
}

inline std::map<Index, double> pairs_from_json(const Json& a) {
  std::map<Index, double> m;
  for (const auto& e : a) m[e.at(0).get<Index>()] = e.at(1).get<double>();
  return m;
}

}  // namespace detail

inline Json to_json(const ProblemSpec& s) {
  Json j;
  j["equation"] = to_string(s.equation);
  j["dirichlet_values"] = detail::pairs_to_json(s.dirichlet);
  j["neumann_values"] = detail::pairs_to_json(s.neumann);
  if (!s.coeff_a.empty()) j["coeff_a"] = s.coeff_a;
  if (!s.source_f.empty()) j["source_f"] = s.source_f;
  if (s.equation == Equation::Heat) {
    j["alpha"] = s.alpha;
    j["initial_u0"] = s.initial_u;
    j["n_steps"] = s.n_steps;
    j["dt"] = s.dt;
    if (!s.dirichlet_steps.empty()) {
      auto steps = Json::array();
      for (const auto& m : s.dirichlet_steps) steps.push_back(detail::pairs_to_json(m));
      j["dirichlet_steps"] = std::move(steps);
    }
  }
  return j;
}

inline ProblemSpec spec_from_json(const Json& j) {
  try {
    ProblemSpec s;
    s.equation = parse_equation(j.at("equation").get<std::string>());
    if (j.contains("dirichlet_values")) s.dirichlet = detail::pairs_from_json(j.at("dirichlet_values"));
    if (j.contains("neumann_values")) s.neumann = detail::pairs_from_json(j.at("neumann_values"));
    if (j.contains("coeff_a")) s.coeff_a = j.at("coeff_a").get<Field>();
    if (j.contains("source_f")) s.source_f = j.at("source_f").get<Field>();
    s.alpha = j.value("alpha", 1.0);
    if (j.contains("initial_u0")) s.initial_u = j.at("initial_u0").get<Field>();
    s.n_steps = j.value("n_steps", std::size_t{0});
    s.dt = j.value("dt", 0.0);
    if (j.contains("dirichlet_steps"))
      for (const auto& m : j.at("dirichlet_steps")) s.dirichlet_steps.push_back(detail::pairs_from_json(m));
    return s;
  } catch (const Json::exception& e) {
    throw IoError(std::string("malformed problem JSON: ") + e.what());
  }
}

inline Json solution_json(const Field& values, const std::string& mesh_ref, std::optional<std::size_t> steps) {
  Json j;
  j["values"] = values;
  j["mesh_ref"] = mesh_ref;
  if (steps) j["steps"] = *steps;
  return j;
}

/// Accepts a solution object, a bare array, or a solve output holding one.
inline Field solution_from_json(const Json& j) {
  try {
    if (j.is_array()) return j.get<Field>();
    if (j.contains("solution")) return solution_from_json(j.at("solution"));
    return j.at("values").get<Field>();
  } catch (const Json::exception& e) {
    throw IoError(std::string("malformed solution JSON: ") + e.what());
  }
}

// Transform, decomposition, diagnostics ------------------------------------

inline Json to_json(const TransformRecord& r) {
  return {{"equation", to_string(r.equation)},
          {"spatial_shift", {r.spatial_shift.x, r.spatial_shift.y}},
          {"spatial_rotation", r.spatial_rotation},
          {"spatial_scale", r.spatial_scale},
          {"value_shift", r.value_shift},
          {"value_scale", r.value_scale},
          {"solution_factor", r.solution_factor()}};
}

inline TransformRecord transform_from_json(const Json& j) {
  try {
    TransformRecord r;
    r.equation = parse_equation(j.at("equation").get<std::string>());
    r.spatial_shift = {j.at("spatial_shift").at(0).get<double>(), j.at("spatial_shift").at(1).get<double>()};
    r.spatial_rotation = j.value("spatial_rotation", 0.0);
    r.spatial_scale = j.value("spatial_scale", 1.0);
    r.value_shift = j.value("value_shift", 0.0);
    r.value_scale = j.value("value_scale", 1.0);
    check_admissible(r);
    return r;
  } catch (const Json::exception& e) {
    throw IoError(std::string("malformed transform JSON: ") + e.what());
  }
}

inline Json to_json(const Decomposition& d) {
  return {{"parts", d.parts}, {"core_parts", d.core_parts}, {"depth", d.depth}, {"overlap_factor", d.overlap_factor}};
}

inline Json to_json(const Diagnostics& d) {
  Json j;
  j["update_norms"] = d.update_norms;
  j["rho_hat"] = d.rho_hat ? Json(*d.rho_hat) : Json(nullptr);
  j["overlap_factor"] = d.overlap_factor;
  j["converged"] = d.converged;
  j["iterations"] = d.iterations;
  j["timings"] = {{"partition", d.timings.partition}, {"local", d.timings.local}, {"update", d.timings.update}};
  if (!d.errors.empty()) j["errors_vs_oracle"] = d.errors;
  j["c_abs_max"] = d.c_abs_max;
  j["subdomain_sizes"] = d.subdomain_sizes;
  j["fragmented_boundaries"] = d.fragmented_boundaries;
  j["stop_reason"] = d.stop_reason;
  return j;
}

/// iteration,update_norm[,error_vs_oracle]
inline std::string convergence_csv(const Diagnostics& d) {
  std::ostringstream os;
  os << std::setprecision(17);
  const bool err = !d.errors.empty();
  os << "iteration,update_norm" << (err ? ",error_vs_oracle" : "") << '\n';
  for (std::size_t i = 0; i < d.update_norms.size(); ++i) {
    os << i + 1 << ',' << d.update_norms[i];
    if (err) os << ',' << d.errors[i];
    os << '\n';
  }
  return os.str();
}

}  // namespace sni

#endif  // SNI_IO_HPP
