#pragma once

// Spectral flow of Hermitian paths, eigenvalue crossing census, spectral
// projections and relative indices of projection pairs.
//
// Sign convention: flow = neg(u = 0) - neg(u = 1) with 0 counted nonnegative.
// An eigenvalue moving upward through 0 contributes +1.

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <map>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "sflow/boundary_ops.hpp"
#include "sflow/invariants.hpp"
#include "sflow/lattice_core.hpp"
#include "sflow/operator_path.hpp"

namespace sflow::sf {

inline constexpr const char* kWorkersEnv = "SFLOW_WORKERS";

/// Worker count from SFLOW_WORKERS, falling back to the hardware concurrency.
inline int workers_from_env() {
  if (const char* v = std::getenv(kWorkersEnv)) {
    char* end = nullptr;
    const long n = std::strtol(v, &end, 10);
    if (end != v && *end == '\0' && n >= 1 && n <= 1024) return static_cast<int>(n);
    throw InvalidConfig(std::string(kWorkersEnv) + " must be an integer in [1, 1024]");
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

struct FlowOptions {
  double zero_tol = lattice::kDefaultZeroTol;
  /// Tracking window [-w, w] for the census.
  double window = 1.0;
  /// 0 selects workers_from_env().
  int workers = 0;
  bool record_curves = false;
};

struct Crossing {
  double u_lo = 0.0;
  double u_hi = 0.0;
  int direction = 0;  ///< +1 upward through zero
  long branch_id = 0;
};

/// Tracked eigenvalue inside the window. Branch ids are positions in the sorted
/// spectrum relative to neg(u = 0): branch 0 is the lowest nonnegative
/// eigenvalue at the start, -1 the highest negative one.
struct CurvePoint {
  double u = 0.0;
  long branch_id = 0;
  double lambda = 0.0;
};

struct SpectralFlowResult {
  int flow = 0;
  int census_flow = 0;
  bool inconsistent_census = false;
  std::vector<double> partition;
  std::vector<Crossing> crossings;
  Index endpoint_kernel[2] = {0, 0};
  Index endpoint_negative[2] = {0, 0};
  /// Smallest |lambda| seen on branches without a detected crossing (inf if
  /// nothing was seen within twice the window).
  double min_gap = std::numeric_limits<double>::infinity();
  /// Largest hermiticity residual / tolerance over all samples.
  double max_hermiticity_ratio = 0.0;
  double max_dropped_coupling = 0.0;
  std::vector<std::string> warnings;
  std::vector<CurvePoint> curves;
};

namespace detail {

struct Sample {
  double u = 0.0;
  Index negative = 0;
  Index near_kernel = 0;
  /// sorted index of values.front()
  Index offset = 0;
  /// eigenvalues within [-2w, 2w], ascending
  std::vector<double> values;
  double hermiticity_ratio = 0.0;
  double dropped = 0.0;

  /// Value of sorted branch i if stored.
  const double* at(Index i) const {
    const Index j = i - offset;
    if (j < 0 || j >= static_cast<Index>(values.size())) return nullptr;
    return &values[static_cast<std::size_t>(j)];
  }
  Index in_window(double w) const {
    return std::count_if(values.begin(), values.end(), [w](double v) { return std::abs(v) <= w; });
  }
};

inline Sample make_sample(const OperatorPath& path, double u, const FlowOptions& opt) {
  const lattice::BlockedOperator op = path.evaluate(u);
  const lattice::Spectrum s = lattice::eig_spectrum(op);
  const lattice::SignCount c = lattice::sign_count(s, opt.zero_tol);
  Sample out;
  out.u = u;
  // 0 counts nonnegative; the near-kernel band is reported, not excluded
  out.negative = c.negative;
  out.near_kernel = c.near_kernel;
  const double reach = 2.0 * opt.window;
  auto lo = std::lower_bound(s.values.begin(), s.values.end(), -reach);
  auto hi = std::upper_bound(s.values.begin(), s.values.end(), reach);
  out.offset = lo - s.values.begin();
  out.values.assign(lo, hi);
  out.hermiticity_ratio = op.hermiticity_residual / lattice::hermiticity_tolerance(op.scale);
  out.dropped = op.dropped_coupling;
  return out;
}

/// Evaluates samples at `us` on a fixed number of workers; results are stored
/// by position, so the outcome does not depend on scheduling.
inline std::vector<Sample> evaluate_batch(const OperatorPath& path, const std::vector<double>& us,
                                          const FlowOptions& opt) {
  std::vector<Sample> out(us.size());
  const int workers = std::max(1, std::min<int>(opt.workers > 0 ? opt.workers : workers_from_env(),
                                                static_cast<int>(us.size())));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto run = [&] {
    for (std::size_t i = next++; i < us.size(); i = next++) {
      try {
        out[i] = make_sample(path, us[i], opt);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = us.size();
      }
    }
  };
  if (workers == 1) {
    run();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < workers; ++t) pool.emplace_back(run);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

enum class IntervalState { resolved, too_coarse, unresolved_crossing };

inline IntervalState classify(const Sample& a, const Sample& b, double w) {
  // crossings must be seen inside the window at both ends
  const Index lo = std::min(a.negative, b.negative);
  const Index hi = std::max(a.negative, b.negative);
  for (Index i = lo; i < hi; ++i) {
    const double* va = a.at(i);
    const double* vb = b.at(i);
    if (!va || !vb || std::abs(*va) > w || std::abs(*vb) > w) return IntervalState::unresolved_crossing;
  }
  if (hi - lo > std::max(a.in_window(w), b.in_window(w))) return IntervalState::unresolved_crossing;
  auto moved_too_far = [&](const Sample& x, const Sample& y) {
    for (std::size_t j = 0; j < x.values.size(); ++j) {
      if (std::abs(x.values[j]) > w) continue;
      const double* other = y.at(x.offset + static_cast<Index>(j));
      if (!other || std::abs(*other - x.values[j]) > 0.25 * w) return true;
    }
    return false;
  };
  if (moved_too_far(a, b) || moved_too_far(b, a)) return IntervalState::too_coarse;
  return IntervalState::resolved;
}

}  // namespace detail

/// Spectral flow by counting, with an independent crossing census from branch
/// tracking. Counting is authoritative; disagreement raises the flag.
inline SpectralFlowResult spectral_flow(const OperatorPath& path, const FlowOptions& opt = {}) {
  if (!(opt.window > 0)) throw InvalidConfig("tracking window must be positive");
  const SamplePolicy policy = path.policy();
  if (policy.initial_samples < 2 || policy.max_samples < policy.initial_samples)
    throw InvalidConfig("invalid sampling policy");

  std::map<double, detail::Sample> samples;
  std::vector<double> pending;
  for (int j = 0; j < policy.initial_samples; ++j)
    pending.push_back(static_cast<double>(j) / (policy.initial_samples - 1));

  SpectralFlowResult r;
  while (!pending.empty()) {
    auto batch = detail::evaluate_batch(path, pending, opt);
    for (auto& s : batch) samples.emplace(s.u, std::move(s));
    pending.clear();
    bool unresolved = false;
    for (auto it = samples.begin(); std::next(it) != samples.end(); ++it) {
      const auto& a = it->second;
      const auto& b = std::next(it)->second;
      const auto state = detail::classify(a, b, opt.window);
      if (state == detail::IntervalState::resolved) continue;
      const bool crossing = state == detail::IntervalState::unresolved_crossing;
      const double mid = 0.5 * (a.u + b.u);
      if (mid <= a.u || mid >= b.u) {
        // interval at floating-point resolution: the spectrum jumps here
        if (crossing)
          throw RefinementExhausted("eigenvalues jump across zero near u=" + std::to_string(a.u));
        continue;
      }
      unresolved = unresolved || crossing;
      pending.push_back(mid);
    }
    if (!pending.empty() && samples.size() + pending.size() > static_cast<std::size_t>(policy.max_samples)) {
      if (unresolved)
        throw RefinementExhausted("crossing not resolved within " +
                                  std::to_string(policy.max_samples) + " samples");
      r.warnings.push_back("sample cap reached with " + std::to_string(pending.size()) +
                           " intervals above the movement threshold");
      pending.clear();
    }
  }

  const detail::Sample& first = samples.begin()->second;
  const detail::Sample& last = samples.rbegin()->second;
  r.flow = static_cast<int>(first.negative - last.negative);
  r.endpoint_kernel[0] = first.near_kernel;
  r.endpoint_kernel[1] = last.near_kernel;
  r.endpoint_negative[0] = first.negative;
  r.endpoint_negative[1] = last.negative;
  if (first.near_kernel > 0)
    r.warnings.push_back("near-kernel eigenvalues at u=0: " + std::to_string(first.near_kernel));
  if (last.near_kernel > 0)
    r.warnings.push_back("near-kernel eigenvalues at u=1: " + std::to_string(last.near_kernel));

  const Index base = first.negative;
  std::vector<bool> crossed;  // indexed by sorted position
  auto mark = [&](Index i) {
    if (i >= static_cast<Index>(crossed.size())) crossed.resize(static_cast<std::size_t>(i) + 1, false);
    crossed[static_cast<std::size_t>(i)] = true;
  };
  for (auto it = samples.begin(); std::next(it) != samples.end(); ++it) {
    const auto& a = it->second;
    const auto& b = std::next(it)->second;
    for (std::size_t j = 0; j < a.values.size(); ++j) {
      const Index i = a.offset + static_cast<Index>(j);
      const double va = a.values[j];
      const double* vb = b.at(i);
      if (!vb || std::abs(va) > opt.window || std::abs(*vb) > opt.window) continue;
      const bool neg_a = va < -opt.zero_tol;
      const bool neg_b = *vb < -opt.zero_tol;
      if (neg_a == neg_b) continue;
      r.crossings.push_back({a.u, b.u, neg_a ? +1 : -1, static_cast<long>(i - base)});
      r.census_flow += neg_a ? 1 : -1;
      mark(i);
    }
  }
  for (const auto& [u, s] : samples) {
    r.partition.push_back(u);
    r.max_hermiticity_ratio = std::max(r.max_hermiticity_ratio, s.hermiticity_ratio);
    r.max_dropped_coupling = std::max(r.max_dropped_coupling, s.dropped);
    for (std::size_t j = 0; j < s.values.size(); ++j) {
      const Index i = s.offset + static_cast<Index>(j);
      const bool is_crossing = i < static_cast<Index>(crossed.size()) && crossed[static_cast<std::size_t>(i)];
      if (!is_crossing) r.min_gap = std::min(r.min_gap, std::abs(s.values[j]));
      if (opt.record_curves && std::abs(s.values[j]) <= opt.window)
        r.curves.push_back({u, static_cast<long>(i - base), s.values[j]});
    }
  }
  if (r.census_flow != r.flow) {
    r.inconsistent_census = true;
    r.warnings.push_back("crossing census gives " + std::to_string(r.census_flow) +
                         " but counting gives " + std::to_string(r.flow));
  }
  return r;
}

/// Zero crossings of tracked branches inside [-w, w].
inline std::vector<Crossing> crossing_census(const OperatorPath& path, double window,
                                             FlowOptions opt = {}) {
  if (!(window > 0)) throw InvalidConfig("census window must be positive");
  opt.window = window;
  return spectral_flow(path, opt).crossings;
}

/// Orthogonal projector onto the eigenspaces with lambda >= cutoff.
struct SpectralProjection {
  Matrix projector;
  /// orthonormal basis of the range
  Matrix basis;
  Index rank = 0;
};

inline constexpr double kCutoffClearance = 1e-8;

inline SpectralProjection spectral_projection(const lattice::HermitianOperator& h, double cutoff) {
  const lattice::EigenDecomposition ed = lattice::eigen_decomposition(h);
  for (Index i = 0; i < ed.values.size(); ++i)
    if (std::abs(ed.values(i) - cutoff) <= kCutoffClearance)
      throw CutoffOnEigenvalue("cutoff " + std::to_string(cutoff) + " is within 1e-8 of an eigenvalue");
  const Index first = std::count_if(ed.values.begin(), ed.values.end(), [cutoff](double v) { return v < cutoff; });
  SpectralProjection p;
  p.rank = h.dim() - first;
  p.basis = ed.vectors.rightCols(p.rank);
  p.projector = p.basis * p.basis.adjoint();
  return p;
}

/// Gap of both generating operators around the window edges +-Lambda.
struct WindowCertificate {
  double edge = 0.0;
  double gap_reference = 0.0;
  double gap_target = 0.0;
};

inline constexpr double kWindowGap = 1e-3;
inline constexpr double kProjectionTolerance = 1e-10;

/// Reference projection P and target Q on a common space; relative_index
/// returns [Q - P].
struct ProjectionPair {
  Matrix p;
  Matrix q;
  std::optional<WindowCertificate> window;
};

namespace detail {

inline double edge_distance(const lattice::Spectrum& s, double edge) {
  double d = std::numeric_limits<double>::infinity();
  for (double v : s.values) d = std::min({d, std::abs(v - edge), std::abs(v + edge)});
  return d;
}

inline double projection_defect(const Matrix& p) {
  return std::max(lattice::max_norm(p * p - p), lattice::max_norm(p - p.adjoint()));
}

/// Numerical rank from singular values above tol * max(1, sigma_max).
inline Index numerical_rank(const Matrix& m, double tol = 1e-8) {
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<Matrix> svd(m);
  const auto& sv = svd.singularValues();
  const double cut = tol * std::max(1.0, sv.size() ? sv(0) : 0.0);
  return std::count_if(sv.begin(), sv.end(), [cut](double x) { return x > cut; });
}

inline Matrix range_basis(const Matrix& projector) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(projector);
  const auto& w = es.eigenvalues();
  const Index rank = std::count_if(w.begin(), w.end(), [](double x) { return x > 0.5; });
  return es.eigenvectors().rightCols(rank);
}

}  // namespace detail

/// [Q - P] = ind(P Q : im Q -> im P) = rank Q - rank P, cross-checked as
/// dim ker(PQ|im Q) - dim ker(QP|im P) from the singular values of P Q.
inline int relative_index(const ProjectionPair& pair) {
  if (!pair.window)
    throw WindowNotCalibrated("projection pair has no window certificate");
  if (pair.window->gap_reference < kWindowGap || pair.window->gap_target < kWindowGap)
    throw WindowNotCalibrated("generating spectra come within 1e-3 of the window edge");
  if (pair.p.rows() != pair.q.rows() || pair.p.cols() != pair.q.cols())
    throw Error("projection pair dimensions differ");
  for (const Matrix* m : {&pair.p, &pair.q})
    if (detail::projection_defect(*m) > kProjectionTolerance)
      throw Error("relative_index input is not an orthogonal projection");
  const Matrix up = detail::range_basis(pair.p);
  const Matrix uq = detail::range_basis(pair.q);
  const double trace_p = pair.p.trace().real();
  const double trace_q = pair.q.trace().real();
  const int by_rank = static_cast<int>(std::lround(trace_q) - std::lround(trace_p));

  const Matrix overlap = up.adjoint() * uq;  // P Q from im Q to im P
  const Index r = detail::numerical_rank(overlap);
  const Index ker_pq = uq.cols() - r;
  const Index ker_qp = up.cols() - r;
  const int by_kernels = static_cast<int>(ker_pq - ker_qp);
  if (by_rank != by_kernels)
    throw IndexMismatch("rank difference " + std::to_string(by_rank) + " but kernel difference " +
                        std::to_string(by_kernels));
  return by_rank;
}

/// P = spectral projection of the circle operator at `cutoff`, Q = compression
/// of g P g^{-1} to the same mode window, evaluated exactly through the
/// extended window |p| <= M + degree(g). Window edge Lambda = M - d - 1/2.
inline ProjectionPair make_conjugation_pair(const boundary::CircleOperator& b, const boundary::TrigPolyGauge& g,
                                            double cutoff) {
  boundary::check_truncation_margin(b, g);
  const int m = b.max_mode();
  const int d = g.degree();
  const int ext = m + d;
  const Matrix t = boundary::multiplication_matrix(g, b.k(), m, ext);
  const lattice::HermitianOperator b_ext = b.window(ext);
  const SpectralProjection p_ext = spectral_projection(b_ext, cutoff);
  ProjectionPair pair;
  pair.p = spectral_projection(b.op(), cutoff).projector;
  pair.q = t * p_ext.projector * t.adjoint();
  const double edge = m - d - 0.5;
  const lattice::HermitianOperator conj = boundary::gauge_conjugate(b, g);
  pair.window = WindowCertificate{edge, detail::edge_distance(lattice::eig_spectrum(b.op()), edge),
                                  detail::edge_distance(lattice::eig_spectrum(conj), edge)};
  return pair;
}

/// Index of the Toeplitz operator P g P from the symbol: -winding(det g),
/// cross-checked against [g P g^{-1} - P] on an untwisted circle.
inline int toeplitz_index(const boundary::TrigPolyGauge& g) {
  const int by_symbol = -invariants::winding_number(g);
  const boundary::CircleOperator b(1, g.rank(), g.degree() + 4, Matrix::Zero(1, 1), 1);
  const int by_projections = relative_index(make_conjugation_pair(b, g, -0.5));
  if (by_symbol != by_projections)
    throw IndexMismatch("symbol index " + std::to_string(by_symbol) + " but relative index " +
                        std::to_string(by_projections));
  return by_symbol;
}

}  // namespace sflow::sf
