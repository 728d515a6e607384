#pragma once

// Experiment battery EXP1..EXP9 and the base sweep.
//
// Every experiment starts from built-in defaults; a config file may override
// them with top-level keys (applied to every experiment) and per-experiment
// keys under "experiments": {"EXPn": {...}} (JSON merge patch semantics).

#include <chrono>
#include <filesystem>
#include <functional>
#include <numbers>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "sflow/boundary_ops.hpp"
#include "sflow/cylinder_ops.hpp"
#include "sflow/harness/config.hpp"
#include "sflow/harness/report.hpp"
#include "sflow/invariants.hpp"
#include "sflow/sf_engine.hpp"

namespace sflow::harness {

struct ExperimentConfig {
  std::string id;
  json params;
  /// Artifacts are written below this directory; empty disables output.
  std::filesystem::path out_dir;
};

inline json default_params(const std::string& id) {
  const json tolerances = {{"zero_tol", 1e-8}, {"window", 1.0}, {"initial_samples", 17}, {"max_samples", 1024}};
  const json cyl_k2 = {{"length", 1.0},        {"radial_elements", 48},
                       {"max_mode", 16},       {"k", 2},
                       {"n", 1},               {"connection", {{"diag", {0.1, 0.1}}}},
                       {"f_start", {{"diag", {1, -1}}}}, {"f_end", {{"diag", {1, 1}}}}};
  const json e1 = {{"type", "scalar"}, {"winding", 1}};
  const json e2 = {{"type", "scalar"}, {"winding", 2}};
  if (id == "EXP1")
    return {{"description", "cylinder spectrum against the exact oracle, second-order convergence"},
            {"cylinder",
             {{"length", 1.0}, {"radial_elements", 48}, {"max_mode", 16}, {"k", 1}, {"n", 1},
              {"connection", {{"diag", {0.1}}}}}},
            {"bc", "minus_id_id"},
            {"refinement_factor", 2},
            {"eigenvalue_count", 20},
            {"tolerances",
             {{"relative_error", 1e-2}, {"ratio_min", 3.0}, {"ratio_max", 5.0}, {"exact_threshold", 1e-10}}}};
  if (id == "EXP2")
    return {{"description", "circle conjugation flow equals minus the winding"},
            {"circle", {{"k", 1}, {"max_mode", 16}, {"connection", {{"diag", {0.1}}}}, {"orientation", 1}}},
            {"gauges",
             {e1, {{"type", "scalar"}, {"winding", -1}}, e2, {{"type", "monomial"}, {"windings", {1, 1}}}}},
            {"tolerances", tolerances}};
  if (id == "EXP3")
    return {{"description", "cylinder flow equals the B+ boundary family flow and minus the B- flow"},
            {"cylinder", cyl_k2},
            {"gauges", {e1, e2}},
            {"tolerances", tolerances}};
  if (id == "EXP4")
    return {{"description", "cylinder flow independent of length and radial resolution"},
            {"cylinder", cyl_k2},
            {"gauge", e1},
            {"lengths", {0.5, 1.0, 2.0}},
            {"radial_elements", {48, 96}},
            {"tolerances", tolerances}};
  if (id == "EXP5") {
    json c1 = cyl_k2, c2 = cyl_k2;
    c1["f_start"] = {{"diag", {1, 1}}};
    c1["f_end"] = {{"diag", {1, 1}}};
    c2["f_start"] = {{"diag", {2, 1}}};
    c2["f_end"] = {{"diag", {2, 1}}};
    return {{"description", "positive boundary endomorphisms give vanishing flow"},
            {"cases", {c1, c2}},
            {"gauge", e1},
            {"tolerances", tolerances}};
  }
  if (id == "EXP6")
    return {{"description", "total boundary family flow over both cylinder ends vanishes"},
            {"cylinder", cyl_k2},
            {"gauges", {e1, e2}},
            {"tolerances", tolerances}};
  if (id == "EXP7")
    return {{"description", "Toeplitz index, relative index and conjugation flow agree"},
            {"circle", {{"k", 1}, {"max_mode", 16}, {"connection", {{"diag", {0.1}}}}, {"orientation", 1}}},
            {"cutoff", 0.0},
            {"gauges",
             {e1, {{"type", "scalar"}, {"winding", -2}}, {{"type", "monomial"}, {"windings", {1, -1}}}}},
            {"tolerances", tolerances}};
  if (id == "EXP8")
    return {{"description", "flow constant along F deformation and gauge homotopy"},
            {"cylinder", cyl_k2},
            {"gauge", e1},
            {"f_deformation", {{"f", {{0.5, 1.0}, {1.0, -0.5}}}, {"v", {0.0, 0.25, 0.5, 0.75, 1.0}}}},
            {"gauge_homotopy", {{"winding", 1}, {"t", {0.0, 0.5, 1.0}}}},
            {"tolerances", tolerances}};
  if (id == "EXP9")
    return {{"description", "fiberwise flow constant over a sampled base and equal to the boundary formula"},
            {"cylinder", cyl_k2},
            {"gauge", e1},
            {"base_sweep",
             {{"samples", 8},
              {"f_tilde", {{"diag", {1, -1}}}},
              {"rotation", "uniform"},
              {"rotation_step", std::numbers::pi / 8},
              {"shift_start", 0.1},
              {"shift_step", 0.1}}},
            {"seed", 7},
            {"tolerances", tolerances}};
  throw InvalidConfig("unknown experiment '" + id + "'");
}

/// defaults <- file top level <- file "experiments"[id]
inline ExperimentConfig resolve_config(const std::string& id, const json& file,
                                       const std::filesystem::path& out_dir) {
  if (!is_experiment_id(id)) throw InvalidConfig("unknown experiment '" + id + "'");
  if (!file.is_null() && !file.is_object()) throw InvalidConfig("config root must be an object");
  json params = default_params(id);
  if (file.is_object()) {
    json common = file;
    common.erase("experiments");
    params.merge_patch(common);
    if (file.contains("experiments") && file.at("experiments").contains(id))
      params.merge_patch(file.at("experiments").at(id));
  }
  return {id, std::move(params), out_dir};
}

/// Cylinder flow predicted by the exact spectrum for F0, FL diagonal with
/// signs s0_i, sL_i and gauge windings n_j: each line with (s0, sL) = (-, +)
/// carries the point branch -lambda(u) and moves up n times, (+, -) carries
/// +lambda(u); the radial branches never reach zero.
inline int exact_cylinder_flow(const std::vector<int>& start_signs, const std::vector<int>& end_signs,
                               const std::vector<int>& windings) {
  if (start_signs.size() != end_signs.size()) throw InvalidConfig("sign lists differ in length");
  int lines = 0;
  for (std::size_t i = 0; i < start_signs.size(); ++i) lines += (end_signs[i] - start_signs[i]) / 2;
  int n = 0;
  for (int w : windings) n += w;
  return lines * n;
}

namespace detail {

inline std::vector<int> eigen_signs(const boundary::BoundaryEndomorphism& f) {
  const boundary::FSplitting s = boundary::split_by_F(f);
  std::vector<int> out(static_cast<std::size_t>(s.k_minus), -1);
  out.insert(out.end(), static_cast<std::size_t>(s.k_plus), 1);
  return out;
}

inline bool is_diagonal(const Matrix& m) {
  for (Index j = 0; j < m.cols(); ++j)
    for (Index i = 0; i < m.rows(); ++i)
      if (i != j && m(i, j) != Complex(0.0, 0.0)) return false;
  return true;
}

/// Per-line windings of a gauge: exact for scalar and monomial gauges,
/// otherwise the determinant winding on a single line.
inline std::vector<int> line_windings(const json& gauge_json, const boundary::TrigPolyGauge& g) {
  const std::string type = get_or<std::string>(gauge_json, "type", "");
  if (type == "monomial") return gauge_json.at("windings").get<std::vector<int>>();
  if (type == "scalar")
    return std::vector<int>(static_cast<std::size_t>(g.rank()), gauge_json.at("winding").get<int>());
  return {invariants::winding_number(g)};
}

/// Shared bookkeeping for one experiment run.
class Runner {
 public:
  Runner(const ExperimentConfig& cfg, ExperimentReport& report)
      : cfg_(cfg), report_(report) {
    const json tol = get_or<json>(cfg.params, "tolerances", json::object());
    options_ = parse_flow_options(tol);
    policy_ = parse_policy(tol);
  }

  const sf::FlowOptions& options() const { return options_; }
  const SamplePolicy& policy() const { return policy_; }

  /// Runs `body`; numerical failures become failed assertions.
  void guard(const std::string& name, const std::function<void()>& body) {
    try {
      body();
    } catch (const InvalidConfig&) {
      throw;
    } catch (const IoError&) {
      throw;
    } catch (const std::exception& e) {
      report_.check(name, "no error", "error", false, e.what());
    }
  }

  /// Spectral flow with census/Hermiticity assertions and CSV artifacts.
  sf::SpectralFlowResult flow(const std::string& tag, const OperatorPath& path) {
    sf::SpectralFlowResult r = sf::spectral_flow(path.with_policy(policy_), options_);
    report_.quantities["flows"][tag] = flow_summary(r);
    report_.check(tag + ": census agrees with counting", r.flow, r.census_flow, !r.inconsistent_census);
    report_.check(tag + ": hermiticity residual within tolerance", "<= 1", r.max_hermiticity_ratio,
                  r.max_hermiticity_ratio <= 1.0);
    for (const auto& w : r.warnings) report_.warnings.push_back(tag + ": " + w);
    if (!cfg_.out_dir.empty()) {
      const std::string stem = cfg_.id + "/" + tag;
      write_text(cfg_.out_dir / (stem + "_census.csv"), census_csv(r));
      write_text(cfg_.out_dir / (stem + "_curves.csv"), curves_csv(r));
      report_.artifacts.push_back(stem + "_census.csv");
      report_.artifacts.push_back(stem + "_curves.csv");
    }
    return r;
  }

  void note_warnings(const std::string& tag, const std::vector<std::string>& ws) {
    for (const auto& w : ws) report_.warnings.push_back(tag + ": " + w);
  }

 private:
  const ExperimentConfig& cfg_;
  ExperimentReport& report_;
  sf::FlowOptions options_;
  SamplePolicy policy_;
};

/// Parsed config pieces are validated up front so that malformed input is a
/// config error, not a failed assertion.
template <class F>
auto parse_stage(F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const InvalidConfig&) {
    throw;
  } catch (const json::exception& e) {
    throw InvalidConfig(e.what());
  } catch (const Error& e) {
    throw InvalidConfig(e.what());
  }
}

struct CircleSetup {
  int k = 1;
  int max_mode = 16;
  Matrix connection;
  int orientation = 1;
};

inline CircleSetup parse_circle(const json& j) {
  CircleSetup c;
  c.k = get_or(j, "k", 1);
  c.max_mode = get_or(j, "max_mode", 16);
  c.connection = j.contains("connection") ? parse_matrix(j.at("connection")) : Matrix(Matrix::Zero(c.k, c.k));
  c.orientation = get_or(j, "orientation", 1);
  return c;
}

struct GaugeCase {
  json spec;
  boundary::TrigPolyGauge gauge;
  std::string tag;
};

inline std::vector<GaugeCase> parse_gauges(const json& list) {
  if (!list.is_array() || list.empty()) throw InvalidConfig("'gauges' must be a nonempty array");
  std::vector<GaugeCase> out;
  std::set<std::string> tags;
  for (const auto& g : list) {
    GaugeCase c{g, parse_gauge(g), gauge_tag(g)};
    while (!tags.insert(c.tag).second) c.tag += "_";
    out.push_back(std::move(c));
  }
  return out;
}

inline cylinder::CylinderConfig cylinder_with_gauge(const json& cyl, const boundary::TrigPolyGauge& g) {
  cylinder::CylinderConfig c = parse_cylinder(cyl);
  c.gauge = g;
  if (!cyl.contains("n")) c.n = g.rank();
  if (c.n != g.rank()) throw InvalidConfig("cylinder n does not match gauge rank");
  return c;
}

/// Flow of the boundary family twisted by `which` summed over both cylinder ends.
inline int boundary_family_total(Runner& run, const std::string& tag, const cylinder::CylinderConfig& c,
                                 boundary::SubBundle which) {
  const invariants::BoundaryData bd = invariants::cylinder_boundary(c.connection, c.f_start, c.f_end, c.gauge);
  int total = 0;
  for (std::size_t i = 0; i < bd.components.size(); ++i) {
    const OperatorPath p = boundary::boundary_family_path(bd.components[i], c.max_mode, which);
    if (p.dim() == 0) continue;
    total += run.flow(tag + "_end" + std::to_string(i), p).flow;
  }
  return total;
}

// ---------------------------------------------------------------------------

inline void exp1(const ExperimentConfig& cfg, ExperimentReport& rep) {
  const json& p = cfg.params;
  const auto [base, bc, factor, count, rel_tol, ratio_min, ratio_max, exact_thr] = parse_stage([&] {
    cylinder::CylinderConfig c = parse_cylinder(require(p, "cylinder"));
    const std::string bcs = get_or<std::string>(p, "bc", "minus_id_id");
    cylinder::EndCondition bc;
    if (bcs == "minus_id_id") {
      bc = cylinder::EndCondition::minus_id_id;
      c.f_start = boundary::BoundaryEndomorphism(-Matrix::Identity(c.k, c.k), 0);
      c.f_end = boundary::BoundaryEndomorphism(Matrix::Identity(c.k, c.k), 1);
    } else if (bcs == "id_minus_id") {
      bc = cylinder::EndCondition::id_minus_id;
      c.f_start = boundary::BoundaryEndomorphism(Matrix::Identity(c.k, c.k), 0);
      c.f_end = boundary::BoundaryEndomorphism(-Matrix::Identity(c.k, c.k), 1);
    } else if (bcs == "id_id") {
      bc = cylinder::EndCondition::id_id;
      c.f_start = boundary::BoundaryEndomorphism(Matrix::Identity(c.k, c.k), 0);
      c.f_end = boundary::BoundaryEndomorphism(Matrix::Identity(c.k, c.k), 1);
    } else {
      throw InvalidConfig("unknown bc '" + bcs + "'");
    }
    c.gauge = boundary::TrigPolyGauge::identity(c.n);
    c.validate();
    const json& tol = require(p, "tolerances");
    return std::make_tuple(c, bc, get_or(p, "refinement_factor", 2), get_or(p, "eigenvalue_count", 20),
                           get_or(tol, "relative_error", 1e-2), get_or(tol, "ratio_min", 3.0),
                           get_or(tol, "ratio_max", 5.0), get_or(tol, "exact_threshold", 1e-10));
  });
  if (factor < 2 || count < 1) throw InvalidConfig("refinement_factor >= 2 and eigenvalue_count >= 1 required");

  Runner run(cfg, rep);
  run.guard("EXP1", [&] {
    const boundary::CircleOperator b(base.k, base.n, base.max_mode, base.connection, 1);
    const lattice::Spectrum lambdas = lattice::eig_spectrum(b.op());
    // sort oracle eigenvalues by |mu|, keep the smallest `count`
    const lattice::Spectrum exact =
        cylinder::exact_cylinder_spectrum(lambdas.values, base.length, bc, base.max_mode);
    std::vector<double> targets = exact.values;
    std::stable_sort(targets.begin(), targets.end(), [](double a, double c) { return std::abs(a) < std::abs(c); });
    if (static_cast<int>(targets.size()) < count) throw Error("oracle window too small");
    targets.resize(static_cast<std::size_t>(count));

    auto errors_at = [&](int n_r) {
      cylinder::CylinderConfig c = base;
      c.radial_elements = n_r;
      run.note_warnings("n_r=" + std::to_string(n_r), c.validate());
      const cylinder::CylinderOperator op = cylinder::build_cylinder_operator(c, 0.0);
      const lattice::BlockedOperator blocks = op.blocks();
      rep.check("n_r=" + std::to_string(n_r) + ": hermiticity residual within tolerance", "<= 1",
                blocks.hermiticity_residual / lattice::hermiticity_tolerance(blocks.scale),
                blocks.hermitian_within_tolerance());
      std::vector<double> discrete = lattice::eig_spectrum(blocks).values;
      std::vector<double> err;
      std::vector<bool> used(discrete.size(), false);
      for (double t : targets) {
        // nearest unused discrete eigenvalue
        std::size_t best = discrete.size();
        for (std::size_t j = 0; j < discrete.size(); ++j)
          if (!used[j] && (best == discrete.size() || std::abs(discrete[j] - t) < std::abs(discrete[best] - t)))
            best = j;
        if (best == discrete.size()) throw Error("no discrete eigenvalue near oracle value");
        used[best] = true;
        err.push_back(std::abs(discrete[best] - t));
      }
      return err;
    };
    const std::vector<double> coarse = errors_at(base.radial_elements);
    const std::vector<double> fine = errors_at(base.radial_elements * factor);

    ordered_json rows = ordered_json::array();
    double worst_rel = 0.0;
    double ratio_lo = std::numeric_limits<double>::infinity(), ratio_hi = 0.0;
    int exact_count = 0;
    bool ratios_ok = true;
    for (std::size_t i = 0; i < targets.size(); ++i) {
      const double rel = coarse[i] / std::max(std::abs(targets[i]), 1e-12);
      worst_rel = std::max(worst_rel, rel);
      ordered_json row = {{"exact", targets[i]}, {"error_coarse", coarse[i]}, {"error_fine", fine[i]}};
      if (coarse[i] < exact_thr) {
        ++exact_count;
        row["ratio"] = nullptr;
      } else {
        const double ratio = coarse[i] / std::max(fine[i], 1e-300);
        row["ratio"] = ratio;
        ratio_lo = std::min(ratio_lo, ratio);
        ratio_hi = std::max(ratio_hi, ratio);
        if (ratio < ratio_min || ratio > ratio_max) ratios_ok = false;
      }
      rows.push_back(std::move(row));
    }
    rep.quantities["eigenvalues"] = rows;
    rep.quantities["exact_to_rounding"] = exact_count;
    rep.check("max relative error at n_r=" + std::to_string(base.radial_elements), "< " + format_double(rel_tol),
              worst_rel, worst_rel < rel_tol);
    rep.check("error ratio on refinement", ordered_json::array({ratio_min, ratio_max}),
              ordered_json::array({finite_or_null(ratio_lo), ratio_hi}), ratios_ok && ratio_hi > 0.0,
              std::to_string(exact_count) + " eigenvalues reproduced to rounding are exempt");
  });
}

inline void exp2(const ExperimentConfig& cfg, ExperimentReport& rep) {
  const auto [circle, gauges] = parse_stage([&] {
    return std::make_pair(parse_circle(require(cfg.params, "circle")), parse_gauges(require(cfg.params, "gauges")));
  });
  Runner run(cfg, rep);
  for (const auto& gc : gauges) {
    run.guard(gc.tag, [&] {
      const boundary::CircleOperator b(circle.k, gc.gauge.rank(), circle.max_mode, circle.connection,
                                       circle.orientation);
      const int w = invariants::winding_number(gc.gauge);
      std::vector<int> lines;
      for (int i = 0; i < circle.k; ++i)
        for (int n : line_windings(gc.spec, gc.gauge)) lines.push_back(n);
      const int oracle = boundary::exact_circle_flow(lines, circle.orientation);
      const int expected = -circle.orientation * circle.k * w;
      const auto r = run.flow(gc.tag, boundary::conjugation_path(b, gc.gauge));
      rep.check(gc.tag + ": flow = -sigma k winding(det g)", expected, r.flow, r.flow == expected);
      rep.check(gc.tag + ": flow = circle oracle", oracle, r.flow, r.flow == oracle);
    });
  }
}

inline void exp3(const ExperimentConfig& cfg, ExperimentReport& rep) {
  const auto [cyl, gauges] = parse_stage([&] {
    return std::make_pair(require(cfg.params, "cylinder"), parse_gauges(require(cfg.params, "gauges")));
  });
  const std::vector<cylinder::CylinderConfig> configs = parse_stage([&] {
    std::vector<cylinder::CylinderConfig> out;
    for (const auto& gc : gauges) out.push_back(cylinder_with_gauge(cyl, gc.gauge));
    for (auto& c : out) c.validate();
    return out;
  });
  Runner run(cfg, rep);
  for (std::size_t i = 0; i < gauges.size(); ++i) {
    const auto& gc = gauges[i];
    const auto& c = configs[i];
    run.guard(gc.tag, [&] {
      run.note_warnings(gc.tag, c.validate());
      const auto rhs = invariants::formula_rhs(
          invariants::cylinder_boundary(c.connection, c.f_start, c.f_end, c.gauge));
      const int cyl_flow = run.flow(gc.tag + "_cylinder", cylinder::cylinder_path(c)).flow;
      const int plus = boundary_family_total(run, gc.tag + "_Bplus", c, boundary::SubBundle::plus);
      const int minus = boundary_family_total(run, gc.tag + "_Bminus", c, boundary::SubBundle::minus);
      rep.quantities["summary"][gc.tag] = {{"cylinder_flow", cyl_flow},
                                           {"b_plus_flow", plus},
                                           {"b_minus_flow", minus},
                                           {"formula_plus", rhs.plus_version},
                                           {"formula_minus", rhs.minus_version}};
      rep.check(gc.tag + ": cylinder flow = B+ family flow", plus, cyl_flow, cyl_flow == plus);
      rep.check(gc.tag + ": cylinder flow = -(B- family flow)", -minus, cyl_flow, cyl_flow == -minus);
      rep.check(gc.tag + ": cylinder flow = boundary formula", rhs.plus_version, cyl_flow,
                cyl_flow == rhs.plus_version);
      if (is_diagonal(c.f_start.matrix) && is_diagonal(c.f_end.matrix) &&
          (gc.spec.value("type", "") == "scalar" || gc.spec.value("type", "") == "monomial")) {
        const int oracle = exact_cylinder_flow(eigen_signs(c.f_start), eigen_signs(c.f_end),
                                               line_windings(gc.spec, gc.gauge));
        rep.check(gc.tag + ": cylinder flow = exact spectrum oracle", oracle, cyl_flow, cyl_flow == oracle);
      }
    });
  }
}

inline void exp4(const ExperimentConfig& cfg, ExperimentReport& rep) {
  const auto [configs, tags, gauge_spec] = parse_stage([&] {
    const json& cyl = require(cfg.params, "cylinder");
    const json& gj = require(cfg.params, "gauge");
    const boundary::TrigPolyGauge g = parse_gauge(gj);
    std::vector<cylinder::CylinderConfig> out;
    std::vector<std::string> names;
    for (double len : require(cfg.params, "lengths").get<std::vector<double>>())
      for (int nr : require(cfg.params, "radial_elements").get<std::vector<int>>()) {
        cylinder::CylinderConfig c = cylinder_with_gauge(cyl, g);
        c.length = len;
        c.radial_elements = nr;
        c.validate();
        out.push_back(c);
        names.push_back("L" + format_double(len) + "_nr" + std::to_string(nr));
      }
    if (out.empty()) throw InvalidConfig("EXP4 needs at least one (length, n_r) pair");
    return std::make_tuple(out, names, gj);
  });
  Runner run(cfg, rep);
  std::vector<int> flows;
  for (std::size_t i = 0; i < configs.size(); ++i)
    run.guard(tags[i], [&] {
      run.note_warnings(tags[i], configs[i].validate());
      flows.push_back(run.flow(tags[i], cylinder::cylinder_path(configs[i])).flow);
    });
  if (flows.size() != configs.size()) return;
  const auto rhs = invariants::formula_rhs(invariants::cylinder_boundary(
      configs[0].connection, configs[0].f_start, configs[0].f_end, configs[0].gauge));
  const bool constant = std::all_of(flows.begin(), flows.end(), [&](int f) { return f == flows[0]; });
  rep.check("flow identical across lengths and resolutions", flows[0], flows, constant);
  rep.check("flow = boundary formula", rhs.plus_version, flows[0], flows[0] == rhs.plus_version);
  (void)gauge_spec;
}

inline void exp5(const ExperimentConfig& cfg, ExperimentReport& rep) {
  const auto configs = parse_stage([&] {
    const boundary::TrigPolyGauge g = parse_gauge(require(cfg.params, "gauge"));
    std::vector<cylinder::CylinderConfig> out;
    for (const auto& cj : require(cfg.params, "cases")) {
      cylinder::CylinderConfig c = cylinder_with_gauge(cj, g);
      c.validate();
      out.push_back(c);
    }
    return out;
  });
  Runner run(cfg, rep);
  for (std::size_t i = 0; i < configs.size(); ++i) {
    const std::string tag = "case" + std::to_string(i);
    run.guard(tag, [&] {
      const auto& c = configs[i];
      const auto s0 = boundary::split_by_F(c.f_start), s1 = boundary::split_by_F(c.f_end);
      const bool definite = (s0.k_minus == 0 && s1.k_minus == 0) || (s0.k_plus == 0 && s1.k_plus == 0);
      const int f = run.flow(tag, cylinder::cylinder_path(c)).flow;
      const auto rhs = invariants::formula_rhs(invariants::cylinder_boundary(c.connection, c.f_start, c.f_end, c.gauge));
      rep.check(tag + ": boundary endomorphisms definite of one sign", true, definite, definite);
      rep.check(tag + ": flow vanishes", 0, f, f == 0);
      rep.check(tag + ": boundary formula vanishes", 0, rhs.plus_version, rhs.plus_version == 0 && rhs.agree);
    });
  }
}

inline void exp6(const ExperimentConfig& cfg, ExperimentReport& rep) {
  const auto [configs, gauges] = parse_stage([&] {
    const json& cyl = require(cfg.params, "cylinder");
    auto gs = parse_gauges(require(cfg.params, "gauges"));
    std::vector<cylinder::CylinderConfig> out;
    for (const auto& gc : gs) {
      out.push_back(cylinder_with_gauge(cyl, gc.gauge));
      out.back().validate();
    }
    return std::make_pair(out, gs);
  });
  Runner run(cfg, rep);
  for (std::size_t i = 0; i < configs.size(); ++i) {
    const auto& c = configs[i];
    const std::string& tag = gauges[i].tag;
    run.guard(tag, [&] {
      const invariants::BoundaryData bd = invariants::cylinder_boundary(c.connection, c.f_start, c.f_end, c.gauge);
      const int total = boundary_family_total(run, tag + "_full", c, boundary::SubBundle::full);
      const auto rhs = invariants::formula_rhs(bd);
      rep.quantities["summary"][tag] = {{"total_boundary_flow", total},
                                        {"formula_plus", rhs.plus_version},
                                        {"formula_minus", rhs.minus_version},
                                        {"rank_winding_sum", rhs.total_rank_term}};
      rep.check(tag + ": total boundary flow vanishes", 0, total, total == 0);
      rep.check(tag + ": sum of sigma k winding vanishes", 0, rhs.total_rank_term, rhs.total_rank_term == 0);
      rep.check(tag + ": formula E+ and E- versions agree", rhs.plus_version, rhs.minus_version, rhs.agree);
    });
  }
}

inline void exp7(const ExperimentConfig& cfg, ExperimentReport& rep) {
  const auto [circle, gauges, cutoff] = parse_stage([&] {
    return std::make_tuple(parse_circle(require(cfg.params, "circle")), parse_gauges(require(cfg.params, "gauges")),
                           get_or(cfg.params, "cutoff", 0.0));
  });
  Runner run(cfg, rep);
  for (const auto& gc : gauges) {
    run.guard(gc.tag, [&] {
      const boundary::CircleOperator b(circle.k, gc.gauge.rank(), circle.max_mode, circle.connection,
                                       circle.orientation);
      const int toeplitz = sf::toeplitz_index(gc.gauge) * circle.k;
      const int relative = sf::relative_index(sf::make_conjugation_pair(b, gc.gauge, cutoff));
      const int f = run.flow(gc.tag, boundary::conjugation_path(b, gc.gauge)).flow;
      rep.quantities["summary"][gc.tag] = {{"toeplitz_index", toeplitz}, {"relative_index", relative}, {"flow", f}};
      rep.check(gc.tag + ": toeplitz index = relative index", toeplitz, relative, toeplitz == relative);
      rep.check(gc.tag + ": relative index = spectral flow", relative, f, relative == f);
      const int expected = -circle.orientation * circle.k * invariants::winding_number(gc.gauge);
      rep.check(gc.tag + ": flow = -winding(det g)", expected, f, f == expected);
    });
  }
}

inline void exp8(const ExperimentConfig& cfg, ExperimentReport& rep) {
  struct Case {
    std::string tag;
    cylinder::CylinderConfig cfg;
  };
  const auto [f_cases, g_cases] = parse_stage([&] {
    const json& cyl = require(cfg.params, "cylinder");
    const boundary::TrigPolyGauge g = parse_gauge(require(cfg.params, "gauge"));
    const json& def = require(cfg.params, "f_deformation");
    const boundary::BoundaryEndomorphism f(parse_matrix(require(def, "f")), 0);
    const Matrix f_tilde = boundary::involution(boundary::split_by_F(f));
    std::vector<Case> fc, gcs;
    for (double v : require(def, "v").get<std::vector<double>>()) {
      cylinder::CylinderConfig c = cylinder_with_gauge(cyl, g);
      c.f_start = boundary::BoundaryEndomorphism(v * f_tilde + (1.0 - v) * f.matrix, 0);
      if (c.f_start.rank() != c.k) throw InvalidConfig("deformed F must be k x k");
      c.validate();
      fc.push_back({"Fv_" + format_double(v), c});
    }
    const json& hom = require(cfg.params, "gauge_homotopy");
    for (double t : require(hom, "t").get<std::vector<double>>()) {
      cylinder::CylinderConfig c =
          cylinder_with_gauge(cyl, boundary::TrigPolyGauge::bessel_homotopy(get_or(hom, "winding", 1), t));
      c.validate();
      gcs.push_back({"gt_" + format_double(t), c});
    }
    if (fc.empty() || gcs.empty()) throw InvalidConfig("EXP8 needs deformation and homotopy samples");
    return std::make_pair(fc, gcs);
  });
  Runner run(cfg, rep);
  for (const auto* family : {&f_cases, &g_cases}) {
    const std::string name = family == &f_cases ? "F deformation" : "gauge homotopy";
    std::vector<int> flows;
    std::vector<int> rhs_values;
    for (const auto& c : *family)
      run.guard(c.tag, [&] {
        run.note_warnings(c.tag, c.cfg.validate());
        flows.push_back(run.flow(c.tag, cylinder::cylinder_path(c.cfg)).flow);
        rhs_values.push_back(invariants::formula_rhs(invariants::cylinder_boundary(
                                                         c.cfg.connection, c.cfg.f_start, c.cfg.f_end, c.cfg.gauge))
                                 .plus_version);
      });
    if (flows.size() != family->size()) continue;
    const bool constant = std::all_of(flows.begin(), flows.end(), [&](int f) { return f == flows[0]; });
    rep.check(name + ": flow constant", flows[0], flows, constant);
    rep.check(name + ": flow = boundary formula", rhs_values, flows, flows == rhs_values);
  }
}

}  // namespace detail

/// One cylinder configuration per sampled base point b_j.
struct BaseSample {
  int index = 0;
  double angle = 0.0;
  double shift = 0.0;
  cylinder::CylinderConfig cfg;
};

inline std::vector<BaseSample> sample_base(const json& params) {
  return detail::parse_stage([&] {
    const json& cyl = require(params, "cylinder");
    const boundary::TrigPolyGauge g = parse_gauge(require(params, "gauge"));
    const cylinder::CylinderConfig base = detail::cylinder_with_gauge(cyl, g);
    std::vector<BaseSample> out;
    const json sweep = get_or<json>(params, "base_sweep", json());
    const int samples = sweep.is_null() ? 0 : get_or(sweep, "samples", 0);
    if (samples <= 0) {
      base.validate();
      out.push_back({0, 0.0, 0.0, base});
      return out;
    }
    if (base.k != 2) throw InvalidConfig("base sweep rotates F in a rank-2 bundle; set k = 2");
    const Matrix f_tilde = sweep.contains("f_tilde") ? parse_matrix(sweep.at("f_tilde")) : base.f_start.matrix;
    const std::string rule = get_or<std::string>(sweep, "rotation", "uniform");
    const double step = get_or(sweep, "rotation_step", std::numbers::pi / 8);
    const double shift0 = get_or(sweep, "shift_start", 0.1);
    const double shift_step = get_or(sweep, "shift_step", 0.1);
    std::mt19937 rng(get_or(params, "seed", 7u));
    std::uniform_real_distribution<double> angle_dist(0.0, 2.0 * std::numbers::pi);
    if (rule != "uniform" && rule != "random") throw InvalidConfig("rotation must be 'uniform' or 'random'");
    for (int b = 0; b < samples; ++b) {
      const double phi = rule == "uniform" ? b * step : angle_dist(rng);
      const double shift = shift0 + b * shift_step;
      // real rotation exp(-i phi sigma_y)
      Matrix u(2, 2);
      u << std::cos(phi), -std::sin(phi), std::sin(phi), std::cos(phi);
      cylinder::CylinderConfig c = base;
      c.f_start = boundary::BoundaryEndomorphism(u * f_tilde * u.adjoint(), 0);
      c.connection = shift * Matrix::Identity(c.k, c.k);
      c.validate();
      out.push_back({b, phi, shift, c});
    }
    return out;
  });
}

inline ExperimentReport run_base_sample(const ExperimentConfig& cfg, const BaseSample& s) {
  ExperimentReport rep;
  rep.id = cfg.id + "[" + std::to_string(s.index) + "]";
  rep.description = "fiber b=" + std::to_string(s.index);
  rep.config_hash = config_hash(cfg.params);
  rep.quantities["angle"] = s.angle;
  rep.quantities["shift"] = s.shift;
  detail::Runner run(cfg, rep);
  const std::string tag = "b" + std::to_string(s.index);
  run.guard(tag, [&] {
    run.note_warnings(tag, s.cfg.validate());
    const int f = run.flow(tag, cylinder::cylinder_path(s.cfg)).flow;
    const auto rhs = invariants::formula_rhs(
        invariants::cylinder_boundary(s.cfg.connection, s.cfg.f_start, s.cfg.f_end, s.cfg.gauge));
    rep.quantities["flow"] = f;
    rep.quantities["formula_plus"] = rhs.plus_version;
    rep.check(tag + ": flow = boundary formula", rhs.plus_version, f, f == rhs.plus_version);
  });
  return rep;
}

/// Per-fiber reports followed by a summary report carrying the constancy
/// assertion.
inline std::vector<ExperimentReport> sweep_base(const ExperimentConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<BaseSample> samples = sample_base(cfg.params);
  std::vector<ExperimentReport> out;
  for (const auto& s : samples) {
    const auto t = std::chrono::steady_clock::now();
    out.push_back(run_base_sample(cfg, s));
    out.back().wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
  }
  ExperimentReport summary;
  summary.id = cfg.id;
  summary.description = get_or<std::string>(cfg.params, "description", "base sweep");
  summary.config_hash = config_hash(cfg.params);
  std::vector<ordered_json> flows;
  bool all_have_flow = true;
  for (const auto& r : out) {
    if (r.quantities.contains("flow"))
      flows.push_back(r.quantities.at("flow"));
    else
      all_have_flow = false;
    for (const auto& a : r.assertions) {
      Assertion copy = a;
      copy.name = r.id + " " + a.name;
      summary.assertions.push_back(std::move(copy));
    }
    for (const auto& w : r.warnings) summary.warnings.push_back(r.id + " " + w);
    summary.artifacts.insert(summary.artifacts.end(), r.artifacts.begin(), r.artifacts.end());
  }
  const bool constant =
      all_have_flow && std::all_of(flows.begin(), flows.end(), [&](const ordered_json& f) { return f == flows[0]; });
  summary.quantities["fiber_flows"] = flows;
  summary.check("fiberwise flow constant over the base", flows.empty() ? ordered_json() : flows[0], flows, constant);
  summary.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  out.push_back(std::move(summary));
  return out;
}

inline ExperimentReport run_experiment(const ExperimentConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  ExperimentReport rep;
  if (cfg.id == "EXP9") {
    rep = std::move(sweep_base(cfg).back());
  } else {
    rep.id = cfg.id;
    rep.description = get_or<std::string>(cfg.params, "description", "");
    rep.config_hash = config_hash(cfg.params);
    if (cfg.id == "EXP1") detail::exp1(cfg, rep);
    else if (cfg.id == "EXP2") detail::exp2(cfg, rep);
    else if (cfg.id == "EXP3") detail::exp3(cfg, rep);
    else if (cfg.id == "EXP4") detail::exp4(cfg, rep);
    else if (cfg.id == "EXP5") detail::exp5(cfg, rep);
    else if (cfg.id == "EXP6") detail::exp6(cfg, rep);
    else if (cfg.id == "EXP7") detail::exp7(cfg, rep);
    else if (cfg.id == "EXP8") detail::exp8(cfg, rep);
    else throw InvalidConfig("unknown experiment '" + cfg.id + "'");
  }
  rep.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!cfg.out_dir.empty())
    write_text(cfg.out_dir / (cfg.id + ".json"), rep.to_json().dump(2) + "\n");
  return rep;
}

}  // namespace sflow::harness
