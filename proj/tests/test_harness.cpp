#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "sflow/harness/experiments.hpp"

using namespace sflow;
using harness::json;

namespace {

std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("sflow_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(SFLOW_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(ResolveConfig, MergesTopLevelThenPerExperiment) {
  const json file = {{"tolerances", {{"window", 0.5}}},
                     {"experiments", {{"EXP2", {{"circle", {{"max_mode", 10}}}}}, {"EXP7", {{"cutoff", 0.05}}}}}};
  const auto c2 = harness::resolve_config("EXP2", file, {});
  EXPECT_EQ(c2.params["tolerances"]["window"], 0.5);
  EXPECT_EQ(c2.params["tolerances"]["zero_tol"], 1e-8);
  EXPECT_EQ(c2.params["circle"]["max_mode"], 10);
  EXPECT_EQ(c2.params["circle"]["k"], 1);
  EXPECT_FALSE(c2.params.contains("experiments"));
  const auto c7 = harness::resolve_config("EXP7", file, {});
  EXPECT_EQ(c7.params["cutoff"], 0.05);
  EXPECT_EQ(c7.params["circle"]["max_mode"], 16);
}

TEST(ResolveConfig, RejectsUnknownIdAndBadRoot) {
  EXPECT_THROW(harness::resolve_config("EXP10", json(), {}), InvalidConfig);
  EXPECT_THROW(harness::resolve_config("EXP1", json::array(), {}), InvalidConfig);
  EXPECT_NO_THROW(harness::resolve_config("EXP1", json(), {}));
}

TEST(ParseMatrix, Formats) {
  const Matrix d = harness::parse_matrix(json{{"diag", {1, -2}}});
  EXPECT_EQ(d(1, 1), Complex(-2));
  EXPECT_EQ(d(0, 1), Complex(0));
  const Matrix r = harness::parse_matrix(json{{0.5, 1.0}, {1.0, -0.5}});
  EXPECT_EQ(r(0, 1), Complex(1.0));
  const Matrix c = harness::parse_matrix(json::parse(R"([[[0, 1], 2], [2, [0, -1]]])"));
  EXPECT_EQ(c(0, 0), Complex(0, 1));
  EXPECT_EQ(c(1, 1), Complex(0, -1));
  EXPECT_THROW(harness::parse_matrix(json{{1, 2}, {3}}), InvalidConfig);
  EXPECT_LT(lattice::max_norm(harness::parse_matrix(harness::matrix_to_json(c)) - c), 1e-15);
}

TEST(ParseGauge, Variants) {
  EXPECT_EQ(harness::parse_gauge(json{{"type", "scalar"}, {"winding", -2}}).rank(), 1);
  EXPECT_EQ(harness::parse_gauge(json{{"type", "monomial"}, {"windings", {1, 1}}}).rank(), 2);
  EXPECT_EQ(harness::parse_gauge(json{{"type", "identity"}, {"rank", 3}}).rank(), 3);
  const auto b = harness::parse_gauge(json{{"type", "bessel_homotopy"}, {"winding", 1}, {"t", 0.5}});
  EXPECT_EQ(invariants::winding_number(b), 1);
  const auto c = harness::parse_gauge(json::parse(R"({"type": "coefficients", "rank": 1,
                                                      "coefficients": {"1": {"diag": [1]}}})"));
  EXPECT_EQ(invariants::winding_number(c), 1);
  EXPECT_THROW(harness::parse_gauge(json{{"type", "spiral"}}), InvalidConfig);
  EXPECT_THROW(harness::parse_gauge(json{{"type", "scalar"}}), InvalidConfig);
  EXPECT_EQ(harness::gauge_tag(json{{"type", "monomial"}, {"windings", {1, -1}}}), "diag_1_-1");
}

TEST(ConfigHash, StableAndSensitive) {
  const json a = harness::default_params("EXP2");
  json b = a;
  EXPECT_EQ(harness::config_hash(a), harness::config_hash(b));
  EXPECT_EQ(harness::config_hash(a).size(), 16u);
  b["circle"]["max_mode"] = 15;
  EXPECT_NE(harness::config_hash(a), harness::config_hash(b));
}

TEST(Report, DeterministicAcrossRuns) {
  const auto cfg = harness::resolve_config("EXP2", json(), {});
  const auto a = harness::run_experiment(cfg);
  const auto b = harness::run_experiment(cfg);
  EXPECT_TRUE(a.passed());
  EXPECT_EQ(a.to_json(false).dump(), b.to_json(false).dump());
  EXPECT_FALSE(a.to_json(false).contains("wall_time_s"));
}

TEST(Report, WritesCsvArtifacts) {
  const auto dir = scratch_dir("artifacts");
  json file = {{"experiments", {{"EXP2", {{"gauges", {{{"type", "scalar"}, {"winding", 1}}}}}}}}};
  const auto rep = harness::run_experiment(harness::resolve_config("EXP2", file, dir));
  ASSERT_TRUE(rep.passed());
  ASSERT_FALSE(rep.artifacts.empty());
  const std::string census = slurp(dir / rep.artifacts[0]);
  EXPECT_EQ(census.substr(0, census.find('\n')), "u_lo,u_hi,direction,branch_id");
  std::size_t rows = 0;
  for (char ch : census) rows += ch == '\n';
  EXPECT_EQ(rows, 2u);
  const std::string curves = slurp(dir / rep.artifacts[1]);
  EXPECT_EQ(curves.substr(0, curves.find('\n')), "u,branch_id,lambda");
  const json summary = json::parse(slurp(dir / "EXP2.json"));
  EXPECT_EQ(summary["experiment"], "EXP2");
  EXPECT_TRUE(summary["passed"].get<bool>());
}

TEST(SampleBase, EmptySweepIsSingleFiber) {
  json params = harness::default_params("EXP9");
  params.erase("base_sweep");
  const auto s = harness::sample_base(params);
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s[0].index, 0);
}

TEST(SampleBase, RotatedFibersKeepSignature) {
  json params = harness::default_params("EXP9");
  params["base_sweep"]["rotation"] = "random";
  const auto a = harness::sample_base(params);
  const auto b = harness::sample_base(params);
  ASSERT_EQ(a.size(), 8u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].angle, b[i].angle);
    const auto split = boundary::split_by_F(a[i].cfg.f_start);
    EXPECT_EQ(split.k_plus, 1);
    EXPECT_EQ(split.k_minus, 1);
    EXPECT_NEAR(a[i].shift, 0.1 * (i + 1), 1e-15);
  }
  params["base_sweep"]["rotation"] = "spiral";
  EXPECT_THROW(harness::sample_base(params), InvalidConfig);
}

TEST(ExactCylinderFlow, Examples) {
  EXPECT_EQ(harness::exact_cylinder_flow({1, -1}, {1, 1}, {1}), 1);
  EXPECT_EQ(harness::exact_cylinder_flow({1, 1}, {1, 1}, {1}), 0);
  EXPECT_EQ(harness::exact_cylinder_flow({-1}, {1}, {2}), 2);
  EXPECT_THROW(harness::exact_cylinder_flow({1}, {1, 1}, {1}), InvalidConfig);
}

TEST(Cli, ExitCodes) {
  const auto dir = scratch_dir("cli");
  std::ofstream(dir / "ok.json") << R"({"experiments": {"EXP2": {"gauges": [{"type": "scalar", "winding": 1}]}}})";
  std::ofstream(dir / "bad.json") << R"({"circle": {"max_mode": "many"}})";
  std::ofstream(dir / "broken.json") << "{ not json";
  // a tolerance no discretization meets turns into a failed assertion
  std::ofstream(dir / "strict.json") << R"({"experiments": {"EXP1": {"tolerances": {"relative_error": 1e-12}}}})";
  const std::string out = " --out " + (dir / "out").string();
  EXPECT_EQ(run_cli("run EXP2 --config " + (dir / "ok.json").string() + out), 0);
  EXPECT_TRUE(std::filesystem::exists(dir / "out" / "EXP2.json"));
  EXPECT_EQ(run_cli("run EXP2 --config " + (dir / "bad.json").string() + out), 2);
  EXPECT_EQ(run_cli("run EXP2 --config " + (dir / "broken.json").string() + out), 2);
  EXPECT_EQ(run_cli("run EXP2 --config " + (dir / "missing.json").string() + out), 2);
  EXPECT_EQ(run_cli("run EXP42" + out), 2);
  EXPECT_EQ(run_cli("run EXP1 --config " + (dir / "strict.json").string() + out), 1);
  EXPECT_EQ(run_cli("oracle circle --windings 1,1"), 0);
  EXPECT_EQ(run_cli("oracle cylinder --lambdas 1 --length 1 --bc sideways"), 2);
}
