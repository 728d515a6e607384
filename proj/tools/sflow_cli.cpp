// Command-line front end: experiment runs, base sweeps and analytic oracles.
//
//   sflow run <EXPn|all> --config <path> --out <dir>
//   sflow sweep --config <path> [--out <dir>]
//   sflow oracle circle --windings 1,1 [--orientation -1]
//   sflow oracle cylinder --lambdas -1,1 --length 2 --bc minus_id_id [--window 5]
//
// Worker threads per spectral flow: SFLOW_WORKERS.
// Exit status: 0 all assertions pass, 1 an assertion failed, 2 config or IO error.

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sflow/harness/experiments.hpp"
#include "sflow/sflow.hpp"

namespace {

using namespace sflow;
using harness::json;

constexpr int kExitPass = 0;
constexpr int kExitFail = 1;
constexpr int kExitConfig = 2;

json load_config(const std::string& path) {
  return path.empty() ? json() : harness::read_json_file(path);
}

void print_line(const harness::ExperimentReport& r) {
  std::size_t ok = 0;
  for (const auto& a : r.assertions) ok += a.pass ? 1 : 0;
  std::printf("%-8s %s  %zu/%zu assertions  %.2fs\n", r.id.c_str(), r.passed() ? "PASS" : "FAIL", ok,
              r.assertions.size(), r.wall_time_s);
  for (const auto& a : r.assertions)
    if (!a.pass)
      std::printf("    failed: %s (expected %s, computed %s)%s%s\n", a.name.c_str(), a.expected.dump().c_str(),
                  a.computed.dump().c_str(), a.detail.empty() ? "" : ": ", a.detail.c_str());
}

int run_command(const std::string& which, const std::string& config_path, const std::string& out) {
  const json file = load_config(config_path);
  std::vector<std::string> ids;
  if (which == "all")
    ids = harness::experiment_ids();
  else
    ids.push_back(which);
  // resolve everything first so a bad config fails before any work
  std::vector<harness::ExperimentConfig> cfgs;
  for (const auto& id : ids) cfgs.push_back(harness::resolve_config(id, file, out));

  bool all_pass = true;
  harness::ordered_json summary;
  summary["experiments"] = harness::ordered_json::array();
  for (const auto& cfg : cfgs) {
    const harness::ExperimentReport r = harness::run_experiment(cfg);
    print_line(r);
    all_pass = all_pass && r.passed();
    summary["experiments"].push_back({{"experiment", r.id}, {"passed", r.passed()}, {"config_hash", r.config_hash}});
  }
  summary["passed"] = all_pass;
  if (ids.size() > 1) harness::write_text(std::filesystem::path(out) / "summary.json", summary.dump(2) + "\n");
  return all_pass ? kExitPass : kExitFail;
}

int sweep_command(const std::string& config_path, const std::string& out) {
  const json file = load_config(config_path);
  const std::string id = file.is_object() ? file.value("experiment", std::string("EXP9")) : "EXP9";
  const harness::ExperimentConfig cfg = harness::resolve_config(id, file, out);
  const auto reports = harness::sweep_base(cfg);
  harness::ordered_json all = harness::ordered_json::array();
  for (const auto& r : reports) {
    print_line(r);
    all.push_back(r.to_json());
  }
  harness::write_text(std::filesystem::path(out) / "sweep.json", all.dump(2) + "\n");
  return reports.back().passed() ? kExitPass : kExitFail;
}

std::vector<double> parse_doubles(const std::string& csv) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= csv.size() && !csv.empty()) {
    const std::size_t comma = csv.find(',', pos);
    const std::string item = csv.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::logic_error&) {
      throw InvalidConfig("not a number: '" + item + "'");
    }
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

int oracle_circle(const std::string& windings_csv, int orientation, int max_mode, double shift) {
  if (orientation != 1 && orientation != -1) throw InvalidConfig("orientation must be +1 or -1");
  std::vector<int> windings;
  for (double w : parse_doubles(windings_csv)) windings.push_back(static_cast<int>(w));
  if (windings.empty()) throw InvalidConfig("--windings is empty");
  std::printf("flow %d\n", boundary::exact_circle_flow(windings, orientation));
  // eigenvalues sigma (m + a) - u sigma n_j at u = 0 and u = 1, |m| <= M
  for (double u : {0.0, 1.0}) {
    std::vector<double> ev;
    for (int n : windings)
      for (int m = -max_mode; m <= max_mode; ++m) ev.push_back(orientation * (m + shift - u * n));
    std::sort(ev.begin(), ev.end());
    std::printf("u=%g:", u);
    for (double v : ev) std::printf(" %.12g", v);
    std::printf("\n");
  }
  return kExitPass;
}

int oracle_cylinder(const std::string& lambdas_csv, double length, const std::string& bc_name, double window) {
  cylinder::EndCondition bc;
  if (bc_name == "minus_id_id") bc = cylinder::EndCondition::minus_id_id;
  else if (bc_name == "id_id") bc = cylinder::EndCondition::id_id;
  else if (bc_name == "id_minus_id") bc = cylinder::EndCondition::id_minus_id;
  else throw InvalidConfig("unknown bc '" + bc_name + "'");
  const auto s = cylinder::exact_cylinder_spectrum(parse_doubles(lambdas_csv), length, bc, window);
  for (double v : s.values) std::printf("%.15g\n", v);
  return kExitPass;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectral flow laboratory for Dirac operators with local boundary conditions"};
  app.require_subcommand(1);

  std::string which, config, out = "out";
  auto* run = app.add_subcommand("run", "run one experiment or all");
  run->add_option("experiment", which, "EXP1..EXP9 or all")->required();
  run->add_option("--config", config, "JSON config (overrides built-in defaults)");
  run->add_option("--out", out, "output directory");

  std::string sweep_config, sweep_out = "sweep_out";
  auto* sweep = app.add_subcommand("sweep", "sweep a cylinder family over sampled base points");
  sweep->add_option("--config", sweep_config, "JSON config with base_sweep")->required();
  sweep->add_option("--out", sweep_out, "output directory");

  auto* oracle = app.add_subcommand("oracle", "print analytic spectra and flows");
  oracle->require_subcommand(1);
  std::string windings = "1";
  int orientation = 1, max_mode = 4;
  double shift = 0.1;
  auto* circle = oracle->add_subcommand("circle", "conjugation flow of the circle operator");
  circle->add_option("--windings", windings, "comma-separated windings per fiber line");
  circle->add_option("--orientation", orientation, "+1 or -1");
  circle->add_option("--max-mode", max_mode, "mode window for the printed spectra");
  circle->add_option("--shift", shift, "constant connection");
  std::string lambdas = "0", bc = "minus_id_id";
  double length = 1.0, window = 5.0;
  auto* cyl = oracle->add_subcommand("cylinder", "exact cylinder spectrum");
  cyl->add_option("--lambdas", lambdas, "comma-separated boundary eigenvalues");
  cyl->add_option("--length", length, "cylinder length");
  cyl->add_option("--bc", bc, "minus_id_id | id_id | id_minus_id");
  cyl->add_option("--window", window, "spectral window");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitPass : kExitConfig;
  }

  try {
    if (run->parsed()) return run_command(which, config, out);
    if (sweep->parsed()) return sweep_command(sweep_config, sweep_out);
    if (circle->parsed()) return oracle_circle(windings, orientation, max_mode, shift);
    if (cyl->parsed()) return oracle_cylinder(lambdas, length, bc, window);
  } catch (const InvalidConfig& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const IoError& e) {
    std::fprintf(stderr, "io error: %s\n", e.what());
    return kExitConfig;
  } catch (const std::filesystem::filesystem_error& e) {
    std::fprintf(stderr, "io error: %s\n", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitFail;
  }
  return kExitConfig;
}
