#pragma once

// Truncated boundary Dirac operators on the circle, their gauge conjugates and
// the linear conjugation paths between them.
//
// Basis ordering of a circle operator with window |m| <= M:
//   index = (m + M) * k * N + a * N + b,   a < k (bundle), b < N (gauge fiber).

#include <numeric>
#include <span>
#include <vector>

#include "sflow/gauge.hpp"
#include "sflow/lattice_core.hpp"
#include "sflow/operator_path.hpp"

namespace sflow::boundary {

inline constexpr double kMinFGap = 1e-6;

/// Invertible Hermitian endomorphism F of one boundary component.
struct BoundaryEndomorphism {
  Matrix matrix;
  int component_id = 0;

  BoundaryEndomorphism() = default;
  explicit BoundaryEndomorphism(Matrix f, int component = 0)
      : matrix(std::move(f)), component_id(component) {
    if (matrix.rows() != matrix.cols() || matrix.rows() == 0)
      throw InvalidConfig("boundary endomorphism must be a nonempty square matrix");
    const double residual = lattice::hermiticity_residual(matrix);
    if (residual > lattice::hermiticity_tolerance(lattice::max_norm(matrix)))
      throw NonHermitianInput("boundary endomorphism is not Hermitian");
    matrix = (0.5 * (matrix + matrix.adjoint())).eval();
  }

  static BoundaryEndomorphism diagonal(const std::vector<double>& d, int component = 0) {
    Matrix f = Matrix::Zero(static_cast<Index>(d.size()), static_cast<Index>(d.size()));
    for (std::size_t i = 0; i < d.size(); ++i) f(static_cast<Index>(i), static_cast<Index>(i)) = d[i];
    return BoundaryEndomorphism(std::move(f), component);
  }

  Index rank() const { return matrix.rows(); }
};

/// Eigen-splitting E = E+ (+) E- of a boundary endomorphism.
struct FSplitting {
  Matrix plus_projector;
  Matrix minus_projector;
  /// Orthonormal columns spanning E+ and E-.
  Matrix plus_basis;
  Matrix minus_basis;
  int k_plus = 0;
  int k_minus = 0;
};

inline FSplitting split_by_F(const BoundaryEndomorphism& f) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(f.matrix);
  if (es.info() != Eigen::Success) throw ConvergenceFailure("eigensolver failed on F");
  const auto& w = es.eigenvalues();
  if (w.cwiseAbs().minCoeff() < kMinFGap)
    throw NearSingularF("boundary endomorphism has |eigenvalue| below 1e-6");
  FSplitting s;
  const Index k = f.rank();
  for (Index i = 0; i < k; ++i) (w(i) > 0 ? s.k_plus : s.k_minus)++;
  // eigenvalues ascending: negatives first
  s.minus_basis = es.eigenvectors().leftCols(s.k_minus);
  s.plus_basis = es.eigenvectors().rightCols(s.k_plus);
  s.plus_projector = s.plus_basis * s.plus_basis.adjoint();
  s.minus_projector = s.minus_basis * s.minus_basis.adjoint();
  return s;
}

/// F~ = Pi+ - Pi-, the involution with the same eigen-splitting as F.
inline Matrix involution(const FSplitting& s) { return s.plus_projector - s.minus_projector; }

/// B = sigma (-i d/dtheta (x) I + A (x) I_N) on C^{kN}-valued functions on the
/// circle. Every Fourier mode is available; `op()` is the |m| <= M compression.
class CircleOperator {
 public:
  CircleOperator(int k, int n, int max_mode, Matrix connection, int orientation)
      : k_(k), n_(n), max_mode_(max_mode), connection_(std::move(connection)),
        orientation_(orientation) {
    if (max_mode < 1) throw InvalidTruncation("mode truncation M must be >= 1");
    if (k < 1 || n < 1) throw InvalidConfig("fiber ranks must be positive");
    if (orientation != 1 && orientation != -1) throw InvalidConfig("orientation must be +1 or -1");
    if (connection_.rows() != k || connection_.cols() != k)
      throw InvalidConfig("connection must be k x k");
    if (lattice::hermiticity_residual(connection_) >
        lattice::hermiticity_tolerance(lattice::max_norm(connection_)))
      throw NonHermitianInput("connection is not Hermitian");
    twist_ = lattice::kron(connection_, Matrix::Identity(n, n));
    op_ = window(max_mode_);
  }

  int k() const { return k_; }
  int n() const { return n_; }
  int fiber_dim() const { return k_ * n_; }
  int max_mode() const { return max_mode_; }
  int orientation() const { return orientation_; }
  const Matrix& connection() const { return connection_; }
  const lattice::HermitianOperator& op() const { return op_; }

  /// sigma (m I + A (x) I_N).
  Matrix mode_block(int m) const {
    return static_cast<double>(orientation_) *
           (static_cast<double>(m) * Matrix::Identity(fiber_dim(), fiber_dim()) + twist_);
  }

  std::vector<lattice::BasisLabel> labels(int max_mode) const {
    std::vector<lattice::BasisLabel> out;
    out.reserve(static_cast<std::size_t>((2 * max_mode + 1) * fiber_dim()));
    for (int m = -max_mode; m <= max_mode; ++m)
      for (int f = 0; f < fiber_dim(); ++f) out.push_back({m, std::nullopt, lattice::Spinor::none, f});
    return out;
  }

  lattice::HermitianOperator window(int max_mode) const {
    const Index kn = fiber_dim();
    const Index dim = (2 * max_mode + 1) * kn;
    Matrix h = Matrix::Zero(dim, dim);
    for (int m = -max_mode; m <= max_mode; ++m)
      h.block((m + max_mode) * kn, (m + max_mode) * kn, kn, kn) = mode_block(m);
    return lattice::HermitianOperator(std::move(h), labels(max_mode));
  }

 private:
  int k_;
  int n_;
  int max_mode_;
  Matrix connection_;
  int orientation_;
  Matrix twist_;
  lattice::HermitianOperator op_;
};

inline CircleOperator build_circle_operator(int k, int n, int max_mode, const Matrix& connection,
                                            int orientation) {
  return CircleOperator(k, n, max_mode, connection, orientation);
}

/// Multiplication by g as a map from the |p| <= cols_max window to the
/// |m| <= rows_max window; entry block (m, p) = I_k (x) g_hat(m - p).
inline Matrix multiplication_matrix(const TrigPolyGauge& g, int k, int rows_max, int cols_max) {
  const Index kn = static_cast<Index>(k) * g.rank();
  Matrix t = Matrix::Zero((2 * rows_max + 1) * kn, (2 * cols_max + 1) * kn);
  const Matrix id_k = Matrix::Identity(k, k);
  for (const auto& [freq, c] : g.coefficients()) {
    const Matrix block = lattice::kron(id_k, c);
    for (int m = -rows_max; m <= rows_max; ++m) {
      const int p = m - freq;
      if (p < -cols_max || p > cols_max) continue;
      t.block((m + rows_max) * kn, (p + cols_max) * kn, kn, kn) = block;
    }
  }
  return t;
}

inline void check_truncation_margin(const CircleOperator& b, const TrigPolyGauge& g) {
  if (g.rank() != b.n())
    throw InvalidConfig("gauge rank " + std::to_string(g.rank()) + " does not match fiber N=" +
                        std::to_string(b.n()));
  if (b.max_mode() < g.degree() + 2)
    throw TruncationTooTight("mode window M=" + std::to_string(b.max_mode()) +
                             " is below degree(g)+2=" + std::to_string(g.degree() + 2));
}

/// Compression of g B g^{-1} to the mode window, with g^{-1} = g^dagger.
///
/// B is diagonal in modes, so the product is evaluated exactly through the
/// extended window |p| <= M + degree(g).
inline lattice::HermitianOperator gauge_conjugate(const CircleOperator& b, const TrigPolyGauge& g) {
  check_truncation_margin(b, g);
  const int m = b.max_mode();
  const int ext = m + g.degree();
  const Matrix t = multiplication_matrix(g, b.k(), m, ext);
  const lattice::HermitianOperator b_ext = b.window(ext);
  Matrix h = t * b_ext.entries() * t.adjoint();
  return lattice::HermitianOperator(std::move(h), b.labels(m));
}

namespace detail {

/// Smallest |eigenvalue| over the diagonal blocks of the outermost modes.
inline double edge_gap(const Matrix& h, int max_mode, Index kn) {
  double gap = std::numeric_limits<double>::infinity();
  for (int m : {-max_mode, max_mode}) {
    const Matrix block = h.block((m + max_mode) * kn, (m + max_mode) * kn, kn, kn);
    Eigen::SelfAdjointEigenSolver<Matrix> es(block, Eigen::EigenvaluesOnly);
    gap = std::min(gap, es.eigenvalues().cwiseAbs().minCoeff());
  }
  return gap;
}

}  // namespace detail

/// u -> (1 - u) B + u g B g^{-1}.
inline OperatorPath conjugation_path(const CircleOperator& b, const TrigPolyGauge& g,
                                     SamplePolicy policy = {}) {
  const lattice::HermitianOperator start = b.op();
  const lattice::HermitianOperator end = gauge_conjugate(b, g);
  const Index kn = b.fiber_dim();
  const double required = b.max_mode() - g.degree() - 1;
  for (const auto* h : {&start, &end})
    if (detail::edge_gap(h->entries(), b.max_mode(), kn) < required)
      throw TruncationTooTight("edge-mode eigenvalues come closer than M-d-1 to zero");
  auto shared = std::make_shared<const std::pair<Matrix, Matrix>>(start.entries(), end.entries());
  auto labels = start.labels();
  return OperatorPath(
      start.dim(), labels,
      [shared, labels](double u) {
        Matrix h = (1.0 - u) * shared->first + u * shared->second;
        return lattice::split_components(lattice::HermitianOperator(std::move(h), labels));
      },
      policy);
}

/// Analytic circle flow: eigenvalues m + a_j - u sigma n_j give
/// sf = -sigma sum_j n_j.
inline int exact_circle_flow(std::span<const int> windings, int orientation) {
  return -orientation * std::accumulate(windings.begin(), windings.end(), 0);
}

/// One boundary circle: orientation sign, constant twist, F and gauge.
struct BoundaryComponentSpec {
  int orientation = 1;
  Matrix connection;
  BoundaryEndomorphism f;
  TrigPolyGauge gauge;
};

enum class SubBundle { full, plus, minus };

/// Conjugation path of the boundary operator twisted by E, E+ or E- of F.
/// An empty sub-bundle gives the zero-dimensional path.
inline OperatorPath boundary_family_path(const BoundaryComponentSpec& c, int max_mode, SubBundle which,
                                         SamplePolicy policy = {}) {
  Matrix basis;
  if (which == SubBundle::full) {
    basis = Matrix::Identity(c.f.rank(), c.f.rank());
  } else {
    const FSplitting s = split_by_F(c.f);
    basis = which == SubBundle::plus ? s.plus_basis : s.minus_basis;
  }
  if (basis.cols() == 0) {
    return OperatorPath(0, {}, [](double) { return lattice::BlockedOperator{}; }, policy);
  }
  const Matrix twist = basis.adjoint() * c.connection * basis;
  const CircleOperator b(static_cast<int>(basis.cols()), c.gauge.rank(), max_mode, twist,
                         c.orientation);
  return conjugation_path(b, c.gauge, policy);
}

}  // namespace sflow::boundary
