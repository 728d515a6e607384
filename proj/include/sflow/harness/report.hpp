#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "sflow/sf_engine.hpp"

namespace sflow::harness {

using ordered_json = nlohmann::ordered_json;

struct Assertion {
  std::string name;
  ordered_json expected;
  ordered_json computed;
  bool pass = false;
  std::string detail;
};

struct ExperimentReport {
  std::string id;
  std::string description;
  std::string config_hash;
  std::vector<Assertion> assertions;
  ordered_json quantities = ordered_json::object();
  std::vector<std::string> warnings;
  std::vector<std::string> artifacts;
  double wall_time_s = 0.0;

  bool passed() const {
    return !assertions.empty() &&
           std::all_of(assertions.begin(), assertions.end(), [](const Assertion& a) { return a.pass; });
  }

  void check(std::string name, ordered_json expected, ordered_json computed, bool pass, std::string detail = {}) {
    assertions.push_back({std::move(name), std::move(expected), std::move(computed), pass, std::move(detail)});
  }

  /// Deterministic part of the report.
  ordered_json to_json(bool with_timing = true) const {
    ordered_json j;
    j["experiment"] = id;
    j["description"] = description;
    j["config_hash"] = config_hash;
    j["passed"] = passed();
    ordered_json list = ordered_json::array();
    for (const auto& a : assertions) {
      ordered_json e;
      e["name"] = a.name;
      e["expected"] = a.expected;
      e["computed"] = a.computed;
      e["pass"] = a.pass;
      if (!a.detail.empty()) e["detail"] = a.detail;
      list.push_back(std::move(e));
    }
    j["assertions"] = std::move(list);
    j["quantities"] = quantities;
    j["warnings"] = warnings;
    j["artifacts"] = artifacts;
    if (with_timing) j["wall_time_s"] = wall_time_s;
    return j;
  }
};

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// JSON value for a double that may be infinite.
inline ordered_json finite_or_null(double v) {
  return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr);
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

inline std::string census_csv(const sf::SpectralFlowResult& r) {
  std::string s = "u_lo,u_hi,direction,branch_id\n";
  for (const auto& c : r.crossings)
    s += format_double(c.u_lo) + "," + format_double(c.u_hi) + "," + std::to_string(c.direction) + "," +
         std::to_string(c.branch_id) + "\n";
  return s;
}

inline std::string curves_csv(const sf::SpectralFlowResult& r) {
  std::string s = "u,branch_id,lambda\n";
  for (const auto& p : r.curves)
    s += format_double(p.u) + "," + std::to_string(p.branch_id) + "," + format_double(p.lambda) + "\n";
  return s;
}

inline ordered_json flow_summary(const sf::SpectralFlowResult& r) {
  ordered_json j;
  j["flow"] = r.flow;
  j["census_flow"] = r.census_flow;
  j["inconsistent_census"] = r.inconsistent_census;
  j["samples"] = r.partition.size();
  j["crossings"] = r.crossings.size();
  j["endpoint_kernel"] = {r.endpoint_kernel[0], r.endpoint_kernel[1]};
  j["endpoint_negative"] = {r.endpoint_negative[0], r.endpoint_negative[1]};
  j["min_gap"] = finite_or_null(r.min_gap);
  j["max_hermiticity_ratio"] = r.max_hermiticity_ratio;
  j["max_dropped_coupling"] = r.max_dropped_coupling;
  j["warnings"] = r.warnings;
  return j;
}

}  // namespace sflow::harness
