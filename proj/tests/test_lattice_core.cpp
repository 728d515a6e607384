#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include "test_support.hpp"

using namespace sflow;
using sflow::testing::random_hermitian;

namespace {

Matrix mat2(Complex a, Complex b, Complex c, Complex d) {
  Matrix m(2, 2);
  m << a, b, c, d;
  return m;
}

}  // namespace

TEST(EigSpectrum, PauliMatrix) {
  const auto s = lattice::eig_spectrum(mat2(0, 1, 1, 0));
  ASSERT_EQ(s.size(), 2);
  EXPECT_NEAR(s.values[0], -1.0, 1e-14);
  EXPECT_NEAR(s.values[1], 1.0, 1e-14);
}

TEST(EigSpectrum, OneByOne) {
  const auto s = lattice::eig_spectrum(Matrix(Matrix::Constant(1, 1, 3.25)));
  ASSERT_EQ(s.size(), 1);
  EXPECT_DOUBLE_EQ(s.values[0], 3.25);
}

TEST(EigSpectrum, UntwistedCircleIsIntegerLadder) {
  const auto b = boundary::build_circle_operator(1, 1, 2, Matrix::Zero(1, 1), 1);
  const auto s = lattice::eig_spectrum(b.op());
  const std::vector<double> expected = {-2, -1, 0, 1, 2};
  EXPECT_LT(sflow::testing::max_abs_diff(s.values, expected), 1e-14);
}

TEST(EigSpectrum, RejectsNonHermitian) {
  EXPECT_THROW(lattice::eig_spectrum(mat2(0, 1, 0, 0)), NonHermitianInput);
  EXPECT_THROW(lattice::HermitianOperator(mat2(0, 1, 0, 0), {}), NonHermitianInput);
}

TEST(EigSpectrum, BackwardErrorSmall) {
  std::mt19937 rng(11);
  const Matrix h = random_hermitian(rng, 60);
  const auto ed = lattice::eigen_decomposition(lattice::HermitianOperator(h, {}));
  const Matrix residual = h * ed.vectors - ed.vectors * ed.values.cast<Complex>().asDiagonal();
  EXPECT_LT(lattice::max_norm(residual), 1e-9 * std::max(1.0, lattice::max_norm(h)));
}

TEST(EigSpectrum, PermutationInvariant) {
  std::mt19937 rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    const Index n = 5 + trial * 3;
    const Matrix h = random_hermitian(rng, n);
    std::vector<Index> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    Matrix p = Matrix::Zero(n, n);
    for (Index i = 0; i < n; ++i) p(i, perm[static_cast<std::size_t>(i)]) = 1.0;
    const auto a = lattice::eig_spectrum(h);
    const auto b = lattice::eig_spectrum(Matrix(p * h * p.transpose()));
    EXPECT_LT(sflow::testing::max_abs_diff(a.values, b.values), 1e-12) << "n=" << n;
  }
}

TEST(EigSpectrum, BandedAgreesWithDense) {
  std::mt19937 rng(5);
  const Index n = 40, kd = 3;
  Matrix h = random_hermitian(rng, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j)
      if (std::abs(i - j) > kd) h(i, j) = 0.0;
  const auto band = lattice::BandMatrix::from_dense(h, kd);
  EXPECT_LT(lattice::max_norm(band.to_dense() - h), 1e-15);
  EXPECT_LT(sflow::testing::max_abs_diff(lattice::eig_spectrum(band).values, lattice::eig_spectrum(h).values), 1e-12);
}

TEST(EigSpectrum, ComponentSplitPreservesSpectrum) {
  std::mt19937 rng(8);
  Matrix h = Matrix::Zero(9, 9);
  h.block(0, 0, 3, 3) = random_hermitian(rng, 3);
  h.block(3, 3, 6, 6) = random_hermitian(rng, 6);
  // interleave the two components
  Matrix p = Matrix::Zero(9, 9);
  const int order[9] = {4, 0, 7, 1, 8, 2, 3, 5, 6};
  for (int i = 0; i < 9; ++i) p(i, order[i]) = 1.0;
  const Matrix mixed = p * h * p.transpose();
  const auto split = lattice::split_components(lattice::HermitianOperator(mixed, sflow::testing::plain_labels(9)));
  EXPECT_EQ(split.blocks.size(), 2u);
  EXPECT_LT(sflow::testing::max_abs_diff(lattice::eig_spectrum(split).values, lattice::eig_spectrum(h).values),
            1e-12);
}

TEST(NegCount, Examples) {
  lattice::Spectrum s{{-2, -1, 0, 1, 2}};
  const auto c = lattice::sign_count(s, 1e-8);
  EXPECT_EQ(c.negative, 2);
  EXPECT_EQ(c.near_kernel, 1);
  EXPECT_EQ(c.positive, 2);
  EXPECT_EQ(lattice::neg_count(lattice::Spectrum{{0.5, 1.5}}, 1e-8), 0);
}

TEST(NegCount, ConjugatedCircleAtEnd) {
  const auto b = boundary::build_circle_operator(1, 1, 2, Matrix::Zero(1, 1), 1);
  const auto g = boundary::TrigPolyGauge::scalar(1);
  // interior of the conjugate is m - 1; the full path matrix at u = 1
  lattice::Spectrum s{{-3, -2, -1, 0, 1}};
  EXPECT_EQ(lattice::neg_count(s), 3);
  EXPECT_THROW(boundary::gauge_conjugate(b, g), TruncationTooTight);
}

TEST(NegCount, CountsSumToDimension) {
  std::mt19937 rng(21);
  std::uniform_real_distribution<double> tol(0.0, 0.5);
  for (int trial = 0; trial < 20; ++trial) {
    const Index n = 4 + trial;
    const auto s = lattice::eig_spectrum(random_hermitian(rng, n, 0.3));
    const auto c = lattice::sign_count(s, tol(rng));
    EXPECT_EQ(c.negative + c.near_kernel + c.positive, n);
  }
  EXPECT_THROW(lattice::sign_count(lattice::Spectrum{{1.0}}, -1.0), Error);
}

TEST(HermiticityResidual, Examples) {
  EXPECT_EQ(lattice::hermiticity_residual(Matrix(Matrix::Identity(3, 3))), 0.0);
  EXPECT_EQ(lattice::hermiticity_residual(mat2(0, Complex(0, 1), Complex(0, -1), 0)), 0.0);
  EXPECT_EQ(lattice::hermiticity_residual(mat2(0, 1, 0, 0)), 1.0);
}

TEST(HermitianOperator, LabelsValidated) {
  auto labels = sflow::testing::plain_labels(2);
  EXPECT_THROW(lattice::HermitianOperator(Matrix::Identity(3, 3), labels), Error);
  labels[1] = labels[0];
  EXPECT_THROW(lattice::HermitianOperator(Matrix::Identity(2, 2), labels), Error);
}

TEST(HermitianOperator, RoundingAsymmetryRemoved) {
  Matrix h = mat2(1, Complex(2, 1e-13), Complex(2, 0), 3);
  const lattice::HermitianOperator op(h, {});
  EXPECT_GT(op.assembly_residual(), 0.0);
  EXPECT_EQ(lattice::hermiticity_residual(op.entries()), 0.0);
}
