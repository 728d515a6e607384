#pragma once

#include <cmath>
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include "sflow/lattice_core.hpp"

namespace sflow::boundary {

inline constexpr int kUnitaritySamples = 256;
inline constexpr double kUnitarityTolerance = 1e-9;

/// Unitary-valued trigonometric polynomial g(theta) = sum_m c_m e^{i m theta},
/// c_m complex N x N.
class TrigPolyGauge {
 public:
  TrigPolyGauge() : TrigPolyGauge(identity(1)) {}

  TrigPolyGauge(int rank, std::map<int, Matrix> coeffs) : rank_(rank) {
    if (rank < 1) throw InvalidGauge("gauge rank must be positive");
    for (auto& [m, c] : coeffs) {
      if (c.rows() != rank || c.cols() != rank)
        throw InvalidGauge("gauge coefficient " + std::to_string(m) + " has wrong shape");
      if (lattice::max_norm(c) == 0.0) continue;
      degree_ = std::max(degree_, std::abs(m));
      coeffs_.emplace(m, std::move(c));
    }
    if (coeffs_.empty()) throw InvalidGauge("gauge has no nonzero coefficient");
    const double defect = unitarity_defect(kUnitaritySamples);
    if (!(defect <= kUnitarityTolerance))
      throw InvalidGauge("gauge is not unitary on samples (defect " + std::to_string(defect) + ")");
    for (int j = 0; j < kUnitaritySamples; ++j) {
      const double theta = 2.0 * std::numbers::pi * j / kUnitaritySamples;
      if (std::abs(evaluate(theta).determinant()) < 1e-12)
        throw InvalidGauge("gauge determinant vanishes on a sample");
    }
  }

  static TrigPolyGauge identity(int rank) {
    return TrigPolyGauge(rank, {{0, Matrix::Identity(rank, rank)}});
  }

  /// diag(e^{i n_1 theta}, ..., e^{i n_N theta}).
  static TrigPolyGauge monomial(const std::vector<int>& windings) {
    const int n = static_cast<int>(windings.size());
    std::map<int, Matrix> coeffs;
    for (int j = 0; j < n; ++j) {
      auto [it, inserted] = coeffs.try_emplace(windings[j], Matrix::Zero(n, n));
      it->second(j, j) = 1.0;
    }
    return TrigPolyGauge(n, std::move(coeffs));
  }

  /// e^{i n theta} times the N x N identity.
  static TrigPolyGauge scalar(int winding, int rank = 1) {
    return TrigPolyGauge(rank, {{winding, Matrix::Identity(rank, rank)}});
  }

  /// e^{i n theta} exp(i t sin theta), via the Jacobi-Anger expansion
  /// exp(i t sin theta) = sum_m J_m(t) e^{i m theta}, cut where |J_m(t)| < tail.
  static TrigPolyGauge bessel_homotopy(int winding, double t, double tail = 1e-12) {
    std::map<int, Matrix> coeffs;
    coeffs[winding] = Matrix::Constant(1, 1, std::cyl_bessel_j(0.0, std::abs(t)));
    for (int m = 1;; ++m) {
      const double jm = std::cyl_bessel_j(static_cast<double>(m), std::abs(t));
      // J_m(-t) = (-1)^m J_m(t);  J_{-m}(t) = (-1)^m J_m(t)
      const double sign_t = (t < 0 && (m % 2 != 0)) ? -1.0 : 1.0;
      const double sign_neg = (m % 2 != 0) ? -1.0 : 1.0;
      if (std::abs(jm) < tail && m > std::abs(t)) break;
      coeffs[winding + m] = Matrix::Constant(1, 1, sign_t * jm);
      coeffs[winding - m] = Matrix::Constant(1, 1, sign_t * sign_neg * jm);
      if (m > 200) throw InvalidGauge("Jacobi-Anger expansion did not truncate");
    }
    return TrigPolyGauge(1, std::move(coeffs));
  }

  /// Constant unitary U.
  static TrigPolyGauge constant(const Matrix& u) {
    return TrigPolyGauge(static_cast<int>(u.rows()), {{0, u}});
  }

  int rank() const { return rank_; }
  int degree() const { return degree_; }
  const std::map<int, Matrix>& coefficients() const { return coeffs_; }

  Matrix coefficient(int m) const {
    auto it = coeffs_.find(m);
    return it == coeffs_.end() ? Matrix::Zero(rank_, rank_) : it->second;
  }

  Matrix evaluate(double theta) const {
    Matrix g = Matrix::Zero(rank_, rank_);
    for (const auto& [m, c] : coeffs_) g += std::polar(1.0, m * theta) * c;
    return g;
  }

  /// dg/dtheta.
  Matrix derivative(double theta) const {
    Matrix g = Matrix::Zero(rank_, rank_);
    for (const auto& [m, c] : coeffs_) g += Complex(0.0, m) * std::polar(1.0, m * theta) * c;
    return g;
  }

  /// Pointwise adjoint, coefficients c'_m = c_{-m}^dagger. Equals the inverse
  /// for a unitary symbol.
  TrigPolyGauge adjoint() const {
    std::map<int, Matrix> out;
    for (const auto& [m, c] : coeffs_) out.emplace(-m, c.adjoint());
    return TrigPolyGauge(rank_, std::move(out));
  }

  /// max over equispaced samples of |g^dagger g - I|_max.
  double unitarity_defect(int samples) const {
    double worst = 0.0;
    const Matrix id = Matrix::Identity(rank_, rank_);
    for (int j = 0; j < samples; ++j) {
      const Matrix g = evaluate(2.0 * std::numbers::pi * j / samples);
      worst = std::max(worst, lattice::max_norm(g.adjoint() * g - id));
    }
    return worst;
  }

  /// Pointwise product (coefficient convolution).
  friend TrigPolyGauge operator*(const TrigPolyGauge& a, const TrigPolyGauge& b) {
    if (a.rank_ != b.rank_) throw InvalidGauge("gauge ranks differ in product");
    std::map<int, Matrix> out;
    for (const auto& [ma, ca] : a.coeffs_)
      for (const auto& [mb, cb] : b.coeffs_) {
        auto [it, inserted] = out.try_emplace(ma + mb, Matrix::Zero(a.rank_, a.rank_));
        it->second += ca * cb;
      }
    return TrigPolyGauge(a.rank_, std::move(out));
  }

 private:
  int rank_ = 1;
  int degree_ = 0;
  std::map<int, Matrix> coeffs_;
};

}  // namespace sflow::boundary
