// Acceptance gate: runs the experiment battery with default parameters and
// prints one PASS/FAIL line per criterion. Exit status is nonzero if any
// criterion fails.

#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "sflow/harness/experiments.hpp"

namespace {

using namespace sflow;

struct Criterion {
  std::string id;
  std::string experiment;
  std::string summary;
  double time_limit_s;  // <= 0 means unbounded
};

std::string first_failure(const harness::ExperimentReport& r) {
  for (const auto& a : r.assertions)
    if (!a.pass) return a.name + (a.detail.empty() ? "" : " (" + a.detail + ")");
  return r.assertions.empty() ? "no assertions recorded" : "";
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {"AC1", "EXP1", "cylinder spectrum matches exact oracle, second-order convergence", 60.0},
      {"AC2", "EXP2", "circle conjugation flow = -winding x multiplicity", 30.0},
      {"AC3", "EXP3", "cylinder flow = B+ family flow = -(B- family flow)", 300.0},
      {"AC4", "EXP4", "cylinder flow independent of length and resolution", 0.0},
      {"AC5", "EXP5", "positive F gives vanishing flow", 0.0},
      {"AC6", "EXP6", "total boundary family flow vanishes, formula versions agree", 0.0},
      {"AC7", "EXP7", "Toeplitz index = relative index = conjugation flow", 0.0},
      {"AC8", "EXP8", "flow constant along F deformation and gauge homotopy", 0.0},
      {"AC9", "EXP9", "fiberwise flow constant over the base and equal to the formula", 0.0},
  };

  std::map<std::string, harness::ExperimentReport> reports;
  int failed = 0;
  for (const auto& c : criteria) {
    harness::ExperimentReport r;
    std::string why;
    try {
      r = harness::run_experiment(harness::resolve_config(c.experiment, harness::json(), {}));
      why = first_failure(r);
    } catch (const std::exception& e) {
      why = std::string("error: ") + e.what();
    }
    if (why.empty() && c.time_limit_s > 0 && r.wall_time_s >= c.time_limit_s)
      why = "runtime " + harness::format_double(r.wall_time_s) + " s over limit";
    const bool ok = why.empty();
    failed += ok ? 0 : 1;
    std::printf("%s %s: %s [%s, %zu assertions, %.2f s]%s%s\n", c.id.c_str(), ok ? "PASS" : "FAIL",
                c.summary.c_str(), c.experiment.c_str(), r.assertions.size(), r.wall_time_s, ok ? "" : " -- ",
                why.c_str());
    reports.emplace(c.experiment, std::move(r));
  }

  std::size_t checked = 0;
  std::string bad;
  for (const auto& [id, r] : reports)
    for (const auto& a : r.assertions) {
      const bool is_structural = a.name.find("census agrees with counting") != std::string::npos ||
                                 a.name.find("hermiticity residual") != std::string::npos;
      if (!is_structural) continue;
      ++checked;
      if (!a.pass && bad.empty()) bad = id + " " + a.name;
    }
  std::vector<std::string> missing;
  for (const auto& [id, r] : reports) {
    bool any = false;
    for (const auto& a : r.assertions)
      any = any || a.name.find("hermiticity residual") != std::string::npos;
    if (!any) missing.push_back(id);
  }
  if (bad.empty() && !missing.empty()) bad = "no hermiticity check recorded for " + missing.front();
  const bool ok10 = bad.empty() && checked > 0;
  failed += ok10 ? 0 : 1;
  std::printf("AC10 %s: every assembled operator Hermitian, census agrees everywhere [%zu checks]%s%s\n",
              ok10 ? "PASS" : "FAIL", checked, ok10 ? "" : " -- ", bad.c_str());

  std::printf("%d of %zu criteria failed\n", failed, criteria.size() + 1);
  return failed == 0 ? 0 : 1;
}
