#pragma once

#include <random>
#include <vector>

#include "sflow/sflow.hpp"

namespace sflow::testing {

inline Matrix random_hermitian(std::mt19937& rng, Index n, double scale = 1.0) {
  std::normal_distribution<double> d(0.0, scale);
  Matrix a(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) a(i, j) = Complex(d(rng), d(rng));
  return 0.5 * (a + a.adjoint());
}

inline Matrix random_unitary(std::mt19937& rng, Index n) {
  Eigen::HouseholderQR<Matrix> qr(random_hermitian(rng, n) + Complex(0.0, 1.0) * random_hermitian(rng, n));
  return qr.householderQ() * Matrix::Identity(n, n);
}

/// Hermitian F with eigenvalues bounded away from zero and prescribed signs.
inline Matrix random_invertible_hermitian(std::mt19937& rng, const std::vector<int>& signs) {
  std::uniform_real_distribution<double> mag(0.3, 2.0);
  const Index n = static_cast<Index>(signs.size());
  Eigen::VectorXd d(n);
  for (Index i = 0; i < n; ++i) d(i) = signs[static_cast<std::size_t>(i)] * mag(rng);
  const Matrix u = random_unitary(rng, n);
  return u * d.cast<Complex>().asDiagonal() * u.adjoint();
}

inline std::vector<lattice::BasisLabel> plain_labels(Index n) {
  std::vector<lattice::BasisLabel> out;
  for (Index i = 0; i < n; ++i) out.push_back({0, std::nullopt, lattice::Spinor::none, static_cast<int>(i)});
  return out;
}

/// Path from an explicit matrix function, one dense block per sample.
template <class F>
OperatorPath matrix_path(Index n, F f, SamplePolicy policy = {}) {
  auto labels = plain_labels(n);
  return OperatorPath(
      n, labels, [f, labels](double u) { return lattice::single_block(lattice::HermitianOperator(f(u), labels)); },
      policy);
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double d = a.size() == b.size() ? 0.0 : std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

}  // namespace sflow::testing
