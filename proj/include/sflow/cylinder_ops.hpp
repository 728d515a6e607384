#pragma once

// Even-dimensional Dirac operator on the finite cylinder S^1 x [0, L] in the
// 2-spinor block form
//
//        [ 0             -d/dr + B_u ]
//    D = [ d/dr + B_u     0          ]
//
// with local boundary conditions  s-(0) = F0 s+(0)  and  s-(L) = -FL s+(L).
// The sign at r = L is the orientation sign of the far boundary circle: the
// relation is written with respect to the inward normal of each component.
//
// Discretization: mixed Galerkin, s+ piecewise linear on the nodes, s- piecewise
// constant on the elements, Fourier modes |m| <= M in the circle direction. The
// boundary relation enters through the boundary term of Green's formula,
// t+(0)^dagger F0 s+(0) + t+(L)^dagger FL s+(L), which makes the form Hermitian.
// The P1 mass is lumped (trapezoidal rule) so the mass congruence is a diagonal
// scaling W^{-1/2} K W^{-1/2}.
//
// Unknowns live on a staggered grid of 2 n_r + 1 slots: slot 2i is node i
// (s+), slot 2e + 1 is element e (s-). The operator is block tridiagonal in the
// slots with blocks acting on the (2M + 1) k N channels of the circle.

#include <array>
#include <cmath>
#include <memory>
#include <numbers>
#include <string>
#include <vector>

#include "sflow/boundary_ops.hpp"
#include "sflow/lattice_core.hpp"
#include "sflow/operator_path.hpp"

namespace sflow::cylinder {

using boundary::BoundaryEndomorphism;
using boundary::TrigPolyGauge;

enum class EndCondition { minus_id_id, id_id, id_minus_id };

inline const char* to_string(EndCondition bc) {
  switch (bc) {
    case EndCondition::minus_id_id: return "minus_id_id";
    case EndCondition::id_id: return "id_id";
    case EndCondition::id_minus_id: return "id_minus_id";
  }
  return "?";
}

struct CylinderConfig {
  double length = 1.0;
  int radial_elements = 48;
  int max_mode = 16;
  int k = 1;
  int n = 1;
  Matrix connection = Matrix::Zero(1, 1);
  BoundaryEndomorphism f_start = BoundaryEndomorphism::diagonal({-1.0});
  BoundaryEndomorphism f_end = BoundaryEndomorphism::diagonal({1.0}, 1);
  TrigPolyGauge gauge = TrigPolyGauge::identity(1);

  /// Throws on violated invariants; returns resolution warnings.
  std::vector<std::string> validate() const {
    if (!(length > 0)) throw InvalidConfig("cylinder length must be positive");
    if (radial_elements < 8) throw InvalidConfig("need at least 8 radial elements");
    if (k < 1 || n < 1) throw InvalidConfig("fiber ranks must be positive");
    if (max_mode < 1) throw InvalidTruncation("mode truncation M must be >= 1");
    if (connection.rows() != k || connection.cols() != k)
      throw InvalidConfig("connection must be k x k");
    if (f_start.rank() != k || f_end.rank() != k)
      throw InvalidConfig("boundary endomorphisms must be k x k");
    boundary::split_by_F(f_start);
    boundary::split_by_F(f_end);
    if (gauge.rank() != n) throw InvalidConfig("gauge rank must equal N");
    if (max_mode < gauge.degree() + 2)
      throw TruncationTooTight("M=" + std::to_string(max_mode) + " below degree(g)+2");
    std::vector<std::string> warnings;
    const double a_norm = connection.operatorNorm();
    const double needed = 8.0 * length * (max_mode + a_norm);
    if (radial_elements < needed)
      warnings.push_back("radial resolution n_r=" + std::to_string(radial_elements) +
                         " below 8 L (M + |A|) = " + std::to_string(needed));
    return warnings;
  }

  Index channels() const { return static_cast<Index>(2 * max_mode + 1) * k * n; }
  Index slots() const { return 2 * static_cast<Index>(radial_elements) + 1; }
};

namespace detail {

/// Lifts a k x k bundle endomorphism to the channel space (modes (x) C^k (x) C^N).
inline Matrix lift_bundle(const Matrix& f, int max_mode, int n) {
  return lattice::kron(Matrix::Identity(2 * max_mode + 1, 2 * max_mode + 1),
                       lattice::kron(f, Matrix::Identity(n, n)));
}

inline bool commute(const Matrix& a, const Matrix& b, double tol) {
  return lattice::max_norm(a * b - b * a) <= tol;
}

}  // namespace detail

class CylinderOperator {
 public:
  /// boundary_op: B_u on the channel space; f_start/f_end lifted to channels.
  CylinderOperator(Matrix boundary_op, Matrix f_start, Matrix f_end, double length,
                   int radial_elements, std::vector<lattice::BasisLabel> channel_labels)
      : b_(std::move(boundary_op)),
        f0_(std::move(f_start)),
        fl_(std::move(f_end)),
        length_(length),
        n_r_(radial_elements),
        channel_labels_(std::move(channel_labels)) {
    h_ = length_ / n_r_;
    residual_ = compute_residual();
    scale_ = compute_scale();
    if (residual_ > lattice::hermiticity_tolerance(scale_))
      throw NonHermitianAssembly("cylinder assembly residual " + std::to_string(residual_));
  }

  Index channels() const { return b_.rows(); }
  Index slots() const { return 2 * static_cast<Index>(n_r_) + 1; }
  Index dim() const { return channels() * slots(); }
  double element_size() const { return h_; }
  const Matrix& boundary_operator() const { return b_; }
  double hermiticity_residual() const { return residual_; }
  double scale() const { return scale_; }

  std::vector<lattice::BasisLabel> labels() const {
    std::vector<lattice::BasisLabel> out;
    out.reserve(static_cast<std::size_t>(dim()));
    for (Index s = 0; s < slots(); ++s)
      for (const auto& c : channel_labels_)
        out.push_back({c.mode, static_cast<int>(s),
                       s % 2 == 0 ? lattice::Spinor::plus : lattice::Spinor::minus, c.fiber});
    return out;
  }

  /// Diagonal block of slot s.
  Matrix diagonal_block(Index s) const {
    if (s == 0) return f0_ / weight(0);
    if (s == slots() - 1) return fl_ / weight(s);
    return Matrix::Zero(channels(), channels());
  }

  /// H(s, s + 1) and H(s + 1, s), each from its own row rule.
  Matrix upper_block(Index s) const {
    return s % 2 == 0 ? node_row(s / 2, s / 2) : cell_row((s - 1) / 2, (s + 1) / 2);
  }
  Matrix lower_block(Index s) const {
    return s % 2 == 0 ? cell_row(s / 2, s / 2) : node_row((s + 1) / 2, (s - 1) / 2);
  }

  /// Full Hermitian matrix in label order (slot-major). Intended for small
  /// configurations and cross-checks.
  lattice::HermitianOperator to_dense() const {
    const Index c = channels();
    Matrix h = Matrix::Zero(dim(), dim());
    for (Index s = 0; s < slots(); ++s) {
      h.block(s * c, s * c, c, c) = diagonal_block(s);
      if (s + 1 < slots()) {
        h.block(s * c, (s + 1) * c, c, c) = upper_block(s);
        h.block((s + 1) * c, s * c, c, c) = lower_block(s);
      }
    }
    return lattice::HermitianOperator(std::move(h), labels());
  }

  /// Spectrum-preserving decomposition into independent radial chains.
  ///
  /// If B_u, F0 and FL commute they are simultaneously diagonalized and every
  /// joint eigen-channel becomes its own chain; otherwise channels are grouped
  /// by the exact sparsity of the generators.
  lattice::BlockedOperator blocks() const {
    const Index c = channels();
    const double gen_scale = std::max({1.0, lattice::max_norm(b_), lattice::max_norm(f0_),
                                       lattice::max_norm(fl_)});
    const double tol = 1e-12 * gen_scale;
    Matrix b = b_, f0 = f0_, fl = fl_;
    double dropped = 0.0;
    if (detail::commute(b_, f0_, tol) && detail::commute(b_, fl_, tol) &&
        detail::commute(f0_, fl_, tol)) {
      // generic combination separates joint eigenspaces
      const Matrix mix = b_ + 0.6180339887498949 * f0_ + 0.4142135623730951 * fl_;
      Eigen::SelfAdjointEigenSolver<Matrix> es(mix);
      if (es.info() != Eigen::Success) throw ConvergenceFailure("channel diagonalization failed");
      const Matrix& u = es.eigenvectors();
      b = u.adjoint() * b_ * u;
      f0 = u.adjoint() * f0_ * u;
      fl = u.adjoint() * fl_ * u;
      for (Matrix* m : {&b, &f0, &fl})
        for (Index j = 0; j < c; ++j)
          for (Index i = 0; i < c; ++i)
            if (i != j && std::abs((*m)(i, j)) <= tol) {
              dropped = std::max(dropped, std::abs((*m)(i, j)));
              (*m)(i, j) = 0.0;
            }
    }
    lattice::detail::DisjointSets sets(c);
    for (const Matrix* m : {&b, &f0, &fl})
      for (Index j = 0; j < c; ++j)
        for (Index i = j + 1; i < c; ++i)
          if ((*m)(i, j) != Complex(0.0, 0.0) || (*m)(j, i) != Complex(0.0, 0.0)) sets.unite(i, j);

    lattice::BlockedOperator out;
    out.labels = labels();
    out.hermiticity_residual = residual_;
    out.scale = scale_;
    out.dropped_coupling = dropped;
    const Matrix id = Matrix::Identity(c, c);
    for (const auto& group : sets.groups()) {
      const Index q = static_cast<Index>(group.size());
      auto restrict = [&](const Matrix& m) {
        Matrix r(q, q);
        for (Index i = 0; i < q; ++i)
          for (Index j = 0; j < q; ++j) r(i, j) = m(group[i], group[j]);
        return r;
      };
      const Matrix bq = restrict(b), f0q = restrict(f0), flq = restrict(fl);
      const Matrix idq = Matrix::Identity(q, q);
      lattice::BandMatrix chain(q * slots(), std::max<Index>(2 * q - 1, 0));
      auto put_block = [&](Index row_slot, Index col_slot, const Matrix& blk) {
        for (Index i = 0; i < q; ++i)
          for (Index j = 0; j < q; ++j) {
            const Index gi = row_slot * q + i, gj = col_slot * q + j;
            if (gi >= gj) chain.set_lower(gi, gj, blk(i, j));
          }
      };
      put_block(0, 0, f0q / weight(0));
      put_block(slots() - 1, slots() - 1, flq / weight(slots() - 1));
      for (Index s = 0; s + 1 < slots(); ++s) {
        // lower block (s + 1, s): cell row for even s, node row for odd s
        const double sign = s % 2 == 0 ? -1.0 : 1.0;
        const Index node = s % 2 == 0 ? s / 2 : (s + 1) / 2;
        const Matrix blk = (sign * idq + 0.5 * h_ * bq) / std::sqrt(weight(2 * node) * h_);
        put_block(s + 1, s, blk);
      }
      out.blocks.emplace_back(std::move(chain));
    }
    (void)id;
    return out;
  }

 private:
  /// Lumped mass of slot s.
  double weight(Index s) const {
    if (s == 0 || s == slots() - 1) return 0.5 * h_;
    return h_;
  }

  /// Test function on node i, trial on element e: <t+, (-d/dr + B) s->, with
  /// the distributional derivative of the piecewise constant s-.
  Matrix node_row(Index node, Index element) const {
    const Index c = channels();
    double jump = 0.0;
    if (element == node) jump = -1.0;
    if (element + 1 == node) jump = 1.0;
    return (jump * Matrix::Identity(c, c) + 0.5 * h_ * b_) / std::sqrt(weight(2 * node) * h_);
  }

  /// Test function on element e, trial on node i: <t-, (d/dr + B) s+>.
  Matrix cell_row(Index element, Index node) const {
    const Index c = channels();
    double slope = 0.0;
    if (node == element) slope = -1.0;
    if (node == element + 1) slope = 1.0;
    return (slope * Matrix::Identity(c, c) + 0.5 * h_ * b_) / std::sqrt(weight(2 * node) * h_);
  }

  double compute_residual() const {
    double r = std::max(lattice::hermiticity_residual(f0_), lattice::hermiticity_residual(fl_));
    for (Index s = 0; s + 1 < slots(); ++s)
      r = std::max(r, lattice::max_norm(upper_block(s) - lower_block(s).adjoint()));
    return r;
  }

  double compute_scale() const {
    double sc = std::max(lattice::max_norm(diagonal_block(0)),
                         lattice::max_norm(diagonal_block(slots() - 1)));
    sc = std::max(sc, lattice::max_norm(lower_block(0)));
    sc = std::max(sc, lattice::max_norm(lower_block(1)));
    return sc;
  }

  Matrix b_;
  Matrix f0_;
  Matrix fl_;
  double length_;
  int n_r_;
  double h_ = 0.0;
  std::vector<lattice::BasisLabel> channel_labels_;
  double residual_ = 0.0;
  double scale_ = 0.0;
};

namespace detail {

struct CylinderData {
  Matrix b_start;
  Matrix b_end;
  Matrix f0;
  Matrix fl;
  std::vector<lattice::BasisLabel> channel_labels;
};

inline CylinderData prepare(const CylinderConfig& cfg) {
  cfg.validate();
  const boundary::CircleOperator b(cfg.k, cfg.n, cfg.max_mode, cfg.connection, 1);
  CylinderData d;
  d.b_start = b.op().entries();
  d.b_end = boundary::gauge_conjugate(b, cfg.gauge).entries();
  d.f0 = lift_bundle(cfg.f_start.matrix, cfg.max_mode, cfg.n);
  d.fl = lift_bundle(cfg.f_end.matrix, cfg.max_mode, cfg.n);
  d.channel_labels = b.op().labels();
  return d;
}

}  // namespace detail

/// Cylinder operator on the curve (1 - u) D + u g D g^{-1}; with an
/// r-independent gauge only the boundary block changes, B -> B_u.
inline CylinderOperator build_cylinder_operator(const CylinderConfig& cfg, double u) {
  if (!(u >= 0.0 && u <= 1.0)) throw Error("path parameter outside [0, 1]");
  const detail::CylinderData d = detail::prepare(cfg);
  return CylinderOperator((1.0 - u) * d.b_start + u * d.b_end, d.f0, d.fl, cfg.length,
                          cfg.radial_elements, d.channel_labels);
}

inline OperatorPath cylinder_path(const CylinderConfig& cfg, SamplePolicy policy = {}) {
  auto d = std::make_shared<const detail::CylinderData>(detail::prepare(cfg));
  const double length = cfg.length;
  const int n_r = cfg.radial_elements;
  const CylinderOperator probe(d->b_start, d->f0, d->fl, length, n_r, d->channel_labels);
  return OperatorPath(
      probe.dim(), probe.labels(),
      [d, length, n_r](double u) {
        return CylinderOperator((1.0 - u) * d->b_start + u * d->b_end, d->f0, d->fl, length, n_r,
                                d->channel_labels)
            .blocks();
      },
      policy);
}

/// Exact spectrum of the cylinder operator with constant boundary block whose
/// eigenvalues are `lambdas`, restricted to |mu| <= window.
///
///   minus_id_id (F0 = -1, FL = 1):  {-lambda_i} u {+-sqrt(lambda_i^2 + (j pi / L)^2), j >= 1}
///   id_minus_id (F0 = 1, FL = -1):  {+lambda_i} u the same branch
///   id_id       (F0 = FL = 1):      {+-sqrt(lambda_i^2 + ((j + 1/2) pi / L)^2), j >= 0}
inline lattice::Spectrum exact_cylinder_spectrum(std::span<const double> lambdas, double length,
                                                 EndCondition bc, double window) {
  if (!(length > 0)) throw InvalidConfig("cylinder length must be positive");
  lattice::Spectrum s;
  const double pi = std::numbers::pi;
  for (double lam : lambdas) {
    if (bc == EndCondition::minus_id_id && std::abs(lam) <= window) s.values.push_back(-lam);
    if (bc == EndCondition::id_minus_id && std::abs(lam) <= window) s.values.push_back(lam);
    const double offset = bc == EndCondition::id_id ? 0.5 : 0.0;
    for (int j = bc == EndCondition::id_id ? 0 : 1;; ++j) {
      const double kappa = (j + offset) * pi / length;
      const double mu = std::sqrt(lam * lam + kappa * kappa);
      if (mu > window) break;
      s.values.push_back(mu);
      s.values.push_back(-mu);
    }
  }
  std::sort(s.values.begin(), s.values.end());
  return s;
}

}  // namespace sflow::cylinder
