#pragma once

// Boundary-side quantities: winding numbers, the degree-1 odd Chern integral and
// the rank/winding formula for the flow of a multi-component boundary family.

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "sflow/boundary_ops.hpp"
#include "sflow/gauge.hpp"

namespace sflow::invariants {

using boundary::BoundaryComponentSpec;
using boundary::TrigPolyGauge;

inline constexpr int kMinWindingSamples = 256;

/// deg(det g) by phase unwrapping on equispaced samples.
inline int winding_number(const TrigPolyGauge& g, int samples = kMinWindingSamples) {
  if (samples < kMinWindingSamples)
    throw Error("winding_number needs at least " + std::to_string(kMinWindingSamples) + " samples");
  const double two_pi = 2.0 * std::numbers::pi;
  Complex prev = g.evaluate(0.0).determinant();
  if (std::abs(prev) < 1e-12) throw InvalidGauge("det g vanishes at theta = 0");
  double total = 0.0;
  for (int j = 1; j <= samples; ++j) {
    const Complex cur = g.evaluate(two_pi * j / samples).determinant();
    if (std::abs(cur) < 1e-12) throw InvalidGauge("det g vanishes on a sample");
    const double step = std::arg(cur / prev);
    if (std::abs(step) >= 0.5 * std::numbers::pi)
      throw PhaseJumpTooLarge("phase of det g jumps by " + std::to_string(step) +
                              " between samples; increase samples");
    total += step;
    prev = cur;
  }
  const double turns = total / two_pi;
  const double rounded = std::round(turns);
  if (std::abs(turns - rounded) > 1e-6)
    throw Error("unwrapped phase is not an integer number of turns");
  return static_cast<int>(rounded);
}

/// (1 / 2 pi i) \oint tr(g^{-1} dg), trapezoidal rule.
///
/// The integrand is a trigonometric polynomial in theta times g^{-1}; the
/// trapezoidal rule converges geometrically, so the default sample count is
/// ample for the gauges in use.
inline double odd_chern_degree1_integral(const TrigPolyGauge& g, int samples = 1024) {
  if (samples < kMinWindingSamples)
    throw Error("odd_chern_degree1_integral needs at least 256 samples");
  winding_number(g, samples);  // same preconditions
  const double two_pi = 2.0 * std::numbers::pi;
  Complex acc = 0.0;
  for (int j = 0; j < samples; ++j) {
    const double theta = two_pi * j / samples;
    const Matrix gv = g.evaluate(theta);
    acc += (gv.inverse() * g.derivative(theta)).trace();
  }
  acc *= two_pi / samples;
  return (acc / Complex(0.0, two_pi)).real();
}

/// Boundary components of a family, each with its own (possibly shared) gauge.
struct BoundaryData {
  std::vector<BoundaryComponentSpec> components;
};

struct FormulaRhs {
  int plus_version = 0;   ///< -sum_c sigma_c k+(c) w_c
  int minus_version = 0;  ///< +sum_c sigma_c k-(c) w_c
  int total_rank_term = 0;  ///< sum_c sigma_c k(c) w_c
  bool agree = false;
};

inline FormulaRhs formula_rhs(const BoundaryData& bd) {
  if (bd.components.empty()) throw InvalidConfig("boundary data needs at least one component");
  FormulaRhs r;
  for (const auto& c : bd.components) {
    if (c.orientation != 1 && c.orientation != -1)
      throw InvalidConfig("orientation must be +1 or -1");
    const boundary::FSplitting s = boundary::split_by_F(c.f);
    const int w = winding_number(c.gauge);
    r.plus_version -= c.orientation * s.k_plus * w;
    r.minus_version += c.orientation * s.k_minus * w;
    r.total_rank_term += c.orientation * static_cast<int>(c.f.rank()) * w;
  }
  r.agree = r.plus_version == r.minus_version;
  return r;
}

/// Boundary data of the cylinder S^1 x [0, L]: r = 0 with sigma = +1 and r = L
/// with sigma = -1, both carrying the pulled-back gauge.
inline BoundaryData cylinder_boundary(const Matrix& connection, const boundary::BoundaryEndomorphism& f_start,
                                      const boundary::BoundaryEndomorphism& f_end,
                                      const TrigPolyGauge& gauge) {
  BoundaryData bd;
  bd.components.push_back({1, connection, f_start, gauge});
  bd.components.push_back({-1, connection, f_end, gauge});
  bd.components[0].f.component_id = 0;
  bd.components[1].f.component_id = 1;
  return bd;
}

}  // namespace sflow::invariants
