#pragma once

// Shared numerical substrate: labeled Hermitian matrices, Hermitian
// eigenvalue extraction (dense and banded, LAPACK backed), signed counting.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#ifndef lapack_complex_float
#define lapack_complex_float std::complex<float>
#endif
#ifndef lapack_complex_double
#define lapack_complex_double std::complex<double>
#endif
#include <lapacke.h>

#include "sflow/errors.hpp"

namespace sflow {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Index = Eigen::Index;

namespace lattice {

inline constexpr double kHermitianTolerance = 1e-10;
inline constexpr double kDefaultZeroTol = 1e-8;

enum class Spinor : std::int8_t { none, plus, minus };

/// One basis vector of a discretized section space.
///
/// `node` indexes the staggered radial grid (even: element node, odd: element
/// midpoint) and is empty for pure boundary operators.
struct BasisLabel {
  int mode = 0;
  std::optional<int> node;
  Spinor spinor = Spinor::none;
  int fiber = 0;

  friend bool operator==(const BasisLabel&, const BasisLabel&) = default;
  friend auto operator<=>(const BasisLabel& a, const BasisLabel& b) {
    return std::tie(a.mode, a.node, a.spinor, a.fiber) <=>
           std::tie(b.mode, b.node, b.spinor, b.fiber);
  }
};

inline double max_norm(const Matrix& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

/// max-norm of H - H^dagger. Non-square input reports +inf.
inline double hermiticity_residual(const Matrix& h) {
  if (h.rows() != h.cols()) return std::numeric_limits<double>::infinity();
  return max_norm(h - h.adjoint());
}

inline double hermiticity_tolerance(double scale) {
  return kHermitianTolerance * std::max(1.0, scale);
}

/// Kronecker product a (x) b.
inline Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

/// Finite Hermitian matrix with a labeled basis. Immutable once built.
class HermitianOperator {
 public:
  HermitianOperator() = default;

  /// Validates dim = #labels, label uniqueness and the Hermiticity invariant.
  /// Rounding-level asymmetry is removed by averaging with the adjoint.
  HermitianOperator(Matrix entries, std::vector<BasisLabel> labels)
      : entries_(std::move(entries)), labels_(std::move(labels)) {
    if (entries_.rows() != entries_.cols())
      throw NonHermitianInput("operator matrix is not square");
    if (!labels_.empty() && static_cast<Index>(labels_.size()) != entries_.rows())
      throw Error("label count does not match operator dimension");
    const double residual = hermiticity_residual(entries_);
    if (residual > hermiticity_tolerance(max_norm(entries_)))
      throw NonHermitianInput("hermiticity residual " + std::to_string(residual) +
                              " exceeds tolerance");
    residual_ = residual;
    entries_ = (0.5 * (entries_ + entries_.adjoint())).eval();
    if (!labels_.empty()) {
      std::vector<BasisLabel> sorted = labels_;
      std::sort(sorted.begin(), sorted.end());
      if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
        throw Error("duplicate basis label");
    }
  }

  Index dim() const { return entries_.rows(); }
  const Matrix& entries() const { return entries_; }
  const std::vector<BasisLabel>& labels() const { return labels_; }
  /// Residual measured before symmetrization.
  double assembly_residual() const { return residual_; }

 private:
  Matrix entries_;
  std::vector<BasisLabel> labels_;
  double residual_ = 0.0;
};

inline double hermiticity_residual(const HermitianOperator& h) {
  return h.assembly_residual();
}

/// Hermitian band matrix in LAPACK lower storage: band(i - j, j) = H(i, j).
struct BandMatrix {
  Index dim = 0;
  Index kd = 0;
  Matrix band;

  BandMatrix() = default;
  BandMatrix(Index n, Index bandwidth)
      : dim(n), kd(bandwidth), band(Matrix::Zero(bandwidth + 1, n)) {}

  /// Sets H(i, j) with i >= j, j + kd >= i.
  void set_lower(Index i, Index j, Complex value) { band(i - j, j) = value; }

  static BandMatrix from_dense(const Matrix& h, Index bandwidth) {
    BandMatrix out(h.rows(), bandwidth);
    for (Index j = 0; j < h.cols(); ++j)
      for (Index i = j; i < std::min(h.rows(), j + bandwidth + 1); ++i)
        out.band(i - j, j) = h(i, j);
    return out;
  }

  Matrix to_dense() const {
    Matrix h = Matrix::Zero(dim, dim);
    for (Index j = 0; j < dim; ++j)
      for (Index i = j; i < std::min(dim, j + kd + 1); ++i) {
        h(i, j) = band(i - j, j);
        h(j, i) = std::conj(band(i - j, j));
      }
    return h;
  }
};

using Block = std::variant<Matrix, BandMatrix>;

inline Index block_dim(const Block& b) {
  return std::visit(
      [](const auto& m) -> Index {
        if constexpr (std::is_same_v<std::decay_t<decltype(m)>, Matrix>)
          return m.rows();
        else
          return m.dim;
      },
      b);
}

/// A Hermitian operator presented as an orthogonal direct sum of blocks.
///
/// The spectrum is the union of the block spectra. `labels` describe the
/// original (undecomposed) basis and may be empty.
struct BlockedOperator {
  std::vector<Block> blocks;
  std::vector<BasisLabel> labels;
  double hermiticity_residual = 0.0;
  double scale = 0.0;
  /// Largest coupling discarded as rounding noise while decoupling.
  double dropped_coupling = 0.0;

  Index dim() const {
    Index n = 0;
    for (const auto& b : blocks) n += block_dim(b);
    return n;
  }
  bool hermitian_within_tolerance() const {
    return hermiticity_residual <= hermiticity_tolerance(scale);
  }
};

/// Sorted real spectrum, multiplicities repeated.
struct Spectrum {
  std::vector<double> values;

  Index size() const { return static_cast<Index>(values.size()); }
  bool empty() const { return values.empty(); }
};

inline Spectrum merge(std::vector<Spectrum> parts) {
  Spectrum out;
  for (auto& p : parts) out.values.insert(out.values.end(), p.values.begin(), p.values.end());
  std::sort(out.values.begin(), out.values.end());
  return out;
}

namespace detail {

inline void check_info(lapack_int info, const char* routine) {
  if (info < 0)
    throw Error(std::string(routine) + ": illegal argument " + std::to_string(-info));
  if (info > 0)
    throw ConvergenceFailure(std::string(routine) + " failed to converge (info=" +
                             std::to_string(info) + ")");
}

inline std::vector<double> dense_eigenvalues(Matrix a) {
  const lapack_int n = static_cast<lapack_int>(a.rows());
  std::vector<double> w(static_cast<std::size_t>(n));
  if (n == 0) return w;
  lapack_int info = LAPACKE_zheevd(LAPACK_COL_MAJOR, 'N', 'L', n, a.data(), n, w.data());
  check_info(info, "zheevd");
  return w;
}

inline std::vector<double> band_eigenvalues(const BandMatrix& b) {
  const lapack_int n = static_cast<lapack_int>(b.dim);
  std::vector<double> w(static_cast<std::size_t>(n));
  if (n == 0) return w;
  Matrix ab = b.band;
  Matrix z(1, 1);
  lapack_int info = LAPACKE_zhbevd(LAPACK_COL_MAJOR, 'N', 'L', n,
                                   static_cast<lapack_int>(b.kd), ab.data(),
                                   static_cast<lapack_int>(ab.rows()), w.data(), z.data(), 1);
  check_info(info, "zhbevd");
  return w;
}

/// Union-find over integer ids.
class DisjointSets {
 public:
  explicit DisjointSets(Index n) : parent_(static_cast<std::size_t>(n)) {
    std::iota(parent_.begin(), parent_.end(), Index{0});
  }
  Index find(Index x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }
  void unite(Index a, Index b) {
    a = find(a);
    b = find(b);
    if (a != b) parent_[std::max(a, b)] = std::min(a, b);
  }
  /// Groups of members, ordered by smallest member.
  std::vector<std::vector<Index>> groups() {
    std::vector<std::vector<Index>> out;
    std::vector<Index> slot(parent_.size(), -1);
    for (Index i = 0; i < static_cast<Index>(parent_.size()); ++i) {
      const Index r = find(i);
      if (slot[r] < 0) {
        slot[r] = static_cast<Index>(out.size());
        out.emplace_back();
      }
      out[slot[r]].push_back(i);
    }
    return out;
  }

 private:
  std::vector<Index> parent_;
};

}  // namespace detail

/// All eigenvalues of a Hermitian matrix, ascending.
inline Spectrum eig_spectrum(const Matrix& h) {
  const double residual = hermiticity_residual(h);
  if (residual > hermiticity_tolerance(max_norm(h)))
    throw NonHermitianInput("eig_spectrum: hermiticity residual " + std::to_string(residual));
  Spectrum s{detail::dense_eigenvalues(h)};
  std::sort(s.values.begin(), s.values.end());
  return s;
}

inline Spectrum eig_spectrum(const HermitianOperator& h) {
  Spectrum s{detail::dense_eigenvalues(h.entries())};
  std::sort(s.values.begin(), s.values.end());
  return s;
}

inline Spectrum eig_spectrum(const BandMatrix& b) {
  Spectrum s{detail::band_eigenvalues(b)};
  std::sort(s.values.begin(), s.values.end());
  return s;
}

inline Spectrum eig_spectrum(const Block& b) {
  return std::visit([](const auto& m) { return eig_spectrum(m); }, b);
}

inline Spectrum eig_spectrum(const BlockedOperator& op) {
  if (!op.hermitian_within_tolerance())
    throw NonHermitianInput("blocked operator hermiticity residual " +
                            std::to_string(op.hermiticity_residual));
  std::vector<Spectrum> parts;
  parts.reserve(op.blocks.size());
  for (const auto& b : op.blocks) parts.push_back(eig_spectrum(b));
  return merge(std::move(parts));
}

/// Eigenvalues (ascending) and orthonormal eigenvectors of a dense operator.
struct EigenDecomposition {
  Eigen::VectorXd values;
  Matrix vectors;
};

inline EigenDecomposition eigen_decomposition(const HermitianOperator& h) {
  Matrix a = h.entries();
  const lapack_int n = static_cast<lapack_int>(a.rows());
  Eigen::VectorXd w(n);
  if (n > 0) {
    lapack_int info = LAPACKE_zheevd(LAPACK_COL_MAJOR, 'V', 'L', n, a.data(), n, w.data());
    detail::check_info(info, "zheevd");
  }
  return {std::move(w), std::move(a)};
}

/// Signed census of a spectrum relative to a zero tolerance.
/// 0 counts as nonnegative; |lambda| <= zero_tol is additionally reported as
/// near-kernel (and included in neither `negative` nor `positive`).
struct SignCount {
  Index negative = 0;
  Index near_kernel = 0;
  Index positive = 0;
};

inline SignCount sign_count(const Spectrum& s, double zero_tol = kDefaultZeroTol) {
  if (zero_tol < 0) throw Error("zero_tol must be nonnegative");
  SignCount c;
  for (double v : s.values) {
    if (v < -zero_tol)
      ++c.negative;
    else if (v <= zero_tol)
      ++c.near_kernel;
    else
      ++c.positive;
  }
  return c;
}

inline Index neg_count(const Spectrum& s, double zero_tol = kDefaultZeroTol) {
  return sign_count(s, zero_tol).negative;
}

/// Splits a dense operator into the connected components of its sparsity
/// pattern (exact zeros only). Spectrum-preserving.
inline BlockedOperator split_components(const HermitianOperator& h) {
  const Matrix& a = h.entries();
  detail::DisjointSets sets(a.rows());
  for (Index j = 0; j < a.cols(); ++j)
    for (Index i = j + 1; i < a.rows(); ++i)
      if (a(i, j) != Complex(0.0, 0.0)) sets.unite(i, j);
  BlockedOperator out;
  out.labels = h.labels();
  out.scale = max_norm(a);
  out.hermiticity_residual = h.assembly_residual();
  for (const auto& group : sets.groups()) {
    const Index q = static_cast<Index>(group.size());
    Matrix sub(q, q);
    for (Index r = 0; r < q; ++r)
      for (Index c = 0; c < q; ++c) sub(r, c) = a(group[r], group[c]);
    out.blocks.emplace_back(std::move(sub));
  }
  return out;
}

inline BlockedOperator single_block(const HermitianOperator& h) {
  BlockedOperator out;
  out.labels = h.labels();
  out.scale = max_norm(h.entries());
  out.hermiticity_residual = h.assembly_residual();
  out.blocks.emplace_back(h.entries());
  return out;
}

}  // namespace lattice
}  // namespace sflow
