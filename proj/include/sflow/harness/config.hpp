#pragma once

// JSON experiment configuration.
//
// Matrices: {"diag": [..]} or a row list [[..], ..]; complex entries as [re, im].
// Gauges:   {"type": "identity", "rank": N}
//           {"type": "scalar", "winding": n, "rank": N}
//           {"type": "monomial", "windings": [n1, ..]}
//           {"type": "bessel_homotopy", "winding": n, "t": t}
//           {"type": "coefficients", "rank": N, "coefficients": {"m": matrix, ..}}

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "sflow/boundary_ops.hpp"
#include "sflow/cylinder_ops.hpp"
#include "sflow/sf_engine.hpp"

namespace sflow::harness {

using json = nlohmann::json;

inline const std::vector<std::string>& experiment_ids() {
  static const std::vector<std::string> ids = {"EXP1", "EXP2", "EXP3", "EXP4", "EXP5",
                                               "EXP6", "EXP7", "EXP8", "EXP9"};
  return ids;
}

inline bool is_experiment_id(const std::string& id) {
  const auto& ids = experiment_ids();
  return std::find(ids.begin(), ids.end(), id) != ids.end();
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidConfig("cannot open config " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw InvalidConfig("config " + path + ": " + e.what());
  }
}

/// 64-bit FNV-1a of a string.
inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string config_hash(const json& cfg) {
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << fnv1a(cfg.dump());
  return os.str();
}

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.is_object() || !j.contains(key) || j.at(key).is_null()) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw InvalidConfig(std::string("field '") + key + "': " + e.what());
  }
}

inline const json& require(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw InvalidConfig(std::string("missing field '") + key + "'");
  return j.at(key);
}

inline Complex parse_complex(const json& j) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
    return {j[0].get<double>(), j[1].get<double>()};
  throw InvalidConfig("complex entry must be a number or [re, im]");
}

inline Matrix parse_matrix(const json& j) {
  if (j.is_object() && j.contains("diag")) {
    const json& d = j.at("diag");
    if (!d.is_array() || d.empty()) throw InvalidConfig("'diag' must be a nonempty array");
    Matrix m = Matrix::Zero(static_cast<Index>(d.size()), static_cast<Index>(d.size()));
    for (std::size_t i = 0; i < d.size(); ++i) m(static_cast<Index>(i), static_cast<Index>(i)) = parse_complex(d[i]);
    return m;
  }
  if (j.is_number()) return Matrix::Constant(1, 1, parse_complex(j));
  if (!j.is_array() || j.empty() || !j[0].is_array()) throw InvalidConfig("matrix must be {\"diag\": ..} or a list of rows");
  const std::size_t rows = j.size(), cols = j[0].size();
  Matrix m(static_cast<Index>(rows), static_cast<Index>(cols));
  for (std::size_t r = 0; r < rows; ++r) {
    if (!j[r].is_array() || j[r].size() != cols) throw InvalidConfig("ragged matrix rows");
    for (std::size_t c = 0; c < cols; ++c) m(static_cast<Index>(r), static_cast<Index>(c)) = parse_complex(j[r][c]);
  }
  return m;
}

inline json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Index c = 0; c < m.cols(); ++c) {
      const Complex z = m(r, c);
      if (z.imag() == 0.0)
        row.push_back(z.real());
      else
        row.push_back({z.real(), z.imag()});
    }
    rows.push_back(row);
  }
  return rows;
}

inline boundary::TrigPolyGauge parse_gauge(const json& j) {
  const std::string type = get_or<std::string>(j, "type", "");
  if (type == "identity") return boundary::TrigPolyGauge::identity(get_or(j, "rank", 1));
  if (type == "scalar") return boundary::TrigPolyGauge::scalar(require(j, "winding").get<int>(), get_or(j, "rank", 1));
  if (type == "monomial") return boundary::TrigPolyGauge::monomial(require(j, "windings").get<std::vector<int>>());
  if (type == "bessel_homotopy")
    return boundary::TrigPolyGauge::bessel_homotopy(get_or(j, "winding", 1), require(j, "t").get<double>(),
                                                    get_or(j, "tail", 1e-12));
  if (type == "coefficients") {
    const int rank = require(j, "rank").get<int>();
    std::map<int, Matrix> coeffs;
    for (const auto& [key, value] : require(j, "coefficients").items()) {
      try {
        coeffs[std::stoi(key)] = parse_matrix(value);
      } catch (const std::logic_error&) {
        throw InvalidConfig("gauge frequency '" + key + "' is not an integer");
      }
    }
    return boundary::TrigPolyGauge(rank, std::move(coeffs));
  }
  throw InvalidConfig("unknown gauge type '" + type + "'");
}

/// Short human-readable gauge tag used in file names and reports.
inline std::string gauge_tag(const json& j) {
  const std::string type = get_or<std::string>(j, "type", "");
  if (type == "scalar") {
    const int n = j.at("winding").get<int>();
    const int rank = get_or(j, "rank", 1);
    return "e" + std::to_string(n) + (rank > 1 ? "x" + std::to_string(rank) : "");
  }
  if (type == "monomial") {
    std::string s = "diag";
    for (int n : j.at("windings").get<std::vector<int>>()) s += "_" + std::to_string(n);
    return s;
  }
  if (type == "bessel_homotopy") {
    std::ostringstream os;
    os << "bessel_t" << j.at("t").get<double>();
    return os.str();
  }
  return type;
}

inline sf::FlowOptions parse_flow_options(const json& tol) {
  sf::FlowOptions o;
  o.zero_tol = get_or(tol, "zero_tol", o.zero_tol);
  o.window = get_or(tol, "window", o.window);
  if (!(o.zero_tol >= 0) || !(o.window > 0)) throw InvalidConfig("tolerances must be positive");
  o.record_curves = true;
  return o;
}

inline SamplePolicy parse_policy(const json& tol) {
  SamplePolicy p;
  p.initial_samples = get_or(tol, "initial_samples", p.initial_samples);
  p.max_samples = get_or(tol, "max_samples", p.max_samples);
  if (p.initial_samples < 2 || p.max_samples < p.initial_samples)
    throw InvalidConfig("invalid sampling policy");
  return p;
}

/// Cylinder geometry block; F matrices and gauge are supplied separately by
/// the experiment.
inline cylinder::CylinderConfig parse_cylinder(const json& j) {
  cylinder::CylinderConfig c;
  c.length = get_or(j, "length", c.length);
  c.radial_elements = get_or(j, "radial_elements", c.radial_elements);
  c.max_mode = get_or(j, "max_mode", c.max_mode);
  c.k = get_or(j, "k", c.k);
  c.n = get_or(j, "n", c.n);
  c.connection = j.contains("connection") ? parse_matrix(j.at("connection"))
                                          : Matrix(Matrix::Zero(c.k, c.k));
  if (j.contains("f_start")) c.f_start = boundary::BoundaryEndomorphism(parse_matrix(j.at("f_start")), 0);
  if (j.contains("f_end")) c.f_end = boundary::BoundaryEndomorphism(parse_matrix(j.at("f_end")), 1);
  return c;
}

}  // namespace sflow::harness
