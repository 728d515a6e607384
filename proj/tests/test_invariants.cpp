#include <gtest/gtest.h>

#include "test_support.hpp"

using namespace sflow;
using boundary::BoundaryEndomorphism;
using boundary::TrigPolyGauge;

namespace {

std::vector<TrigPolyGauge> configured_gauges() {
  std::mt19937 rng(5);
  const Matrix u = sflow::testing::random_unitary(rng, 2);
  return {TrigPolyGauge::identity(1),
          TrigPolyGauge::scalar(1),
          TrigPolyGauge::scalar(-2),
          TrigPolyGauge::scalar(2, 2),
          TrigPolyGauge::monomial({1, -1}),
          TrigPolyGauge::monomial({1, 2}),
          TrigPolyGauge::bessel_homotopy(1, 0.5),
          TrigPolyGauge::bessel_homotopy(1, 1.0),
          TrigPolyGauge::constant(u) * TrigPolyGauge::monomial({3, -1}) * TrigPolyGauge::constant(u.adjoint())};
}

}  // namespace

TEST(WindingNumber, Examples) {
  EXPECT_EQ(invariants::winding_number(TrigPolyGauge::scalar(1)), 1);
  EXPECT_EQ(invariants::winding_number(TrigPolyGauge::monomial({1, 2})), 3);
  std::mt19937 rng(2);
  EXPECT_EQ(invariants::winding_number(TrigPolyGauge::constant(sflow::testing::random_unitary(rng, 3))), 0);
}

TEST(WindingNumber, SamplingGuards) {
  EXPECT_THROW(invariants::winding_number(TrigPolyGauge::scalar(1), 100), Error);
  EXPECT_THROW(invariants::winding_number(TrigPolyGauge::scalar(70), 256), PhaseJumpTooLarge);
  EXPECT_EQ(invariants::winding_number(TrigPolyGauge::scalar(70), 1024), 70);
}

TEST(WindingNumber, AdditiveUnderProductNegatedByInverse) {
  const auto gauges = configured_gauges();
  for (const auto& a : gauges)
    for (const auto& b : gauges) {
      if (a.rank() != b.rank()) continue;
      EXPECT_EQ(invariants::winding_number(a * b), invariants::winding_number(a) + invariants::winding_number(b));
    }
  for (const auto& g : gauges) EXPECT_EQ(invariants::winding_number(g.adjoint()), -invariants::winding_number(g));
}

TEST(OddChern, Examples) {
  EXPECT_NEAR(invariants::odd_chern_degree1_integral(TrigPolyGauge::scalar(1)), 1.0, 1e-12);
  EXPECT_NEAR(invariants::odd_chern_degree1_integral(TrigPolyGauge::scalar(-2)), -2.0, 1e-12);
  EXPECT_NEAR(invariants::odd_chern_degree1_integral(TrigPolyGauge::identity(1)), 0.0, 1e-15);
}

TEST(OddChern, EqualsWindingOnConfiguredGauges) {
  for (const auto& g : configured_gauges())
    EXPECT_NEAR(invariants::odd_chern_degree1_integral(g), invariants::winding_number(g), 1e-9);
}

TEST(FormulaRhs, CylinderEndsExample) {
  const auto bd = invariants::cylinder_boundary(Matrix::Identity(2, 2) * 0.1, BoundaryEndomorphism::diagonal({1, -1}),
                                                BoundaryEndomorphism::diagonal({1, 1}), TrigPolyGauge::scalar(1));
  const auto r = invariants::formula_rhs(bd);
  EXPECT_EQ(r.plus_version, 1);
  EXPECT_EQ(r.minus_version, 1);
  EXPECT_TRUE(r.agree);
  EXPECT_EQ(r.total_rank_term, 0);
}

TEST(FormulaRhs, PositiveFVanishes) {
  const auto bd = invariants::cylinder_boundary(Matrix::Identity(2, 2) * 0.1, BoundaryEndomorphism::diagonal({1, 1}),
                                                BoundaryEndomorphism::diagonal({1, 1}), TrigPolyGauge::scalar(1));
  EXPECT_EQ(invariants::formula_rhs(bd).plus_version, 0);
}

TEST(FormulaRhs, SingleNegativeComponent) {
  for (int n : {1, -2, 3}) {
    invariants::BoundaryData bd;
    bd.components.push_back({1, Matrix::Zero(2, 2), BoundaryEndomorphism::diagonal({-1, -1}), TrigPolyGauge::scalar(n)});
    const auto r = invariants::formula_rhs(bd);
    EXPECT_EQ(r.plus_version, 0);
    EXPECT_EQ(r.minus_version, 2 * n);
    EXPECT_FALSE(r.agree);
  }
  EXPECT_THROW(invariants::formula_rhs(invariants::BoundaryData{}), InvalidConfig);
}

TEST(FormulaRhs, InvariantUnderFDeformation) {
  Matrix f(2, 2);
  f << 0.5, 1.0, 1.0, -0.5;
  const Matrix ft = boundary::involution(boundary::split_by_F(BoundaryEndomorphism(f)));
  int reference = 0;
  for (double v : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    const auto bd = invariants::cylinder_boundary(Matrix::Identity(2, 2) * 0.1,
                                                  BoundaryEndomorphism(v * ft + (1 - v) * f),
                                                  BoundaryEndomorphism::diagonal({1, 1}), TrigPolyGauge::scalar(1));
    const auto r = invariants::formula_rhs(bd);
    if (v == 0.0) reference = r.plus_version;
    EXPECT_EQ(r.plus_version, reference);
    EXPECT_TRUE(r.agree);
  }
  EXPECT_EQ(reference, 1);
}

TEST(FormulaRhs, CobordismIdentityForCylinderBoundaries) {
  std::mt19937 rng(13);
  std::uniform_int_distribution<int> wind(-3, 3);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<int> s0 = {trial % 2 ? 1 : -1, 1, trial % 3 ? -1 : 1};
    std::vector<int> s1 = {-1, trial % 5 ? 1 : -1, 1};
    const auto bd = invariants::cylinder_boundary(
        Matrix::Zero(3, 3), BoundaryEndomorphism(sflow::testing::random_invertible_hermitian(rng, s0)),
        BoundaryEndomorphism(sflow::testing::random_invertible_hermitian(rng, s1)), TrigPolyGauge::scalar(wind(rng)));
    const auto r = invariants::formula_rhs(bd);
    EXPECT_EQ(r.total_rank_term, 0);
    EXPECT_TRUE(r.agree);
  }
}
