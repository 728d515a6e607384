#pragma once

#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "sflow/lattice_core.hpp"

namespace sflow {

struct SamplePolicy {
  int initial_samples = 17;
  int max_samples = 1 << 10;
};

/// u in [0, 1] -> Hermitian operator of fixed dimension and labels.
class OperatorPath {
 public:
  using Evaluator = std::function<lattice::BlockedOperator(double)>;

  OperatorPath(Index dim, std::vector<lattice::BasisLabel> labels, Evaluator eval,
               SamplePolicy policy = {})
      : dim_(dim),
        labels_(std::make_shared<const std::vector<lattice::BasisLabel>>(std::move(labels))),
        eval_(std::move(eval)),
        policy_(policy) {}

  lattice::BlockedOperator evaluate(double u) const {
    if (!(u >= -1e-12 && u <= 1.0 + 1e-12))
      throw Error("path parameter " + std::to_string(u) + " outside [0, 1]");
    lattice::BlockedOperator op = eval_(std::clamp(u, 0.0, 1.0));
    if (op.dim() != dim_) throw Error("path evaluation changed dimension");
    return op;
  }

  Index dim() const { return dim_; }
  const std::vector<lattice::BasisLabel>& labels() const { return *labels_; }
  const SamplePolicy& policy() const { return policy_; }
  OperatorPath with_policy(SamplePolicy p) const {
    OperatorPath out = *this;
    out.policy_ = p;
    return out;
  }

 private:
  Index dim_;
  std::shared_ptr<const std::vector<lattice::BasisLabel>> labels_;
  Evaluator eval_;
  SamplePolicy policy_;
};

inline OperatorPath constant_path(lattice::BlockedOperator op) {
  const Index n = op.dim();
  auto labels = op.labels;
  auto shared = std::make_shared<const lattice::BlockedOperator>(std::move(op));
  return OperatorPath(n, std::move(labels), [shared](double) { return *shared; });
}

/// Block-diagonal path: every member contributes its own blocks.
inline OperatorPath direct_sum(std::vector<OperatorPath> parts) {
  Index n = 0;
  std::vector<lattice::BasisLabel> labels;
  for (const auto& p : parts) {
    n += p.dim();
    labels.insert(labels.end(), p.labels().begin(), p.labels().end());
  }
  SamplePolicy policy = parts.empty() ? SamplePolicy{} : parts.front().policy();
  auto shared = std::make_shared<const std::vector<OperatorPath>>(std::move(parts));
  // member labels may repeat across summands; they are only kept for reference
  return OperatorPath(
      n, std::move(labels),
      [shared](double u) {
        lattice::BlockedOperator out;
        for (const auto& p : *shared) {
          lattice::BlockedOperator op = p.evaluate(u);
          for (auto& b : op.blocks) out.blocks.push_back(std::move(b));
          out.labels.insert(out.labels.end(), op.labels.begin(), op.labels.end());
          out.hermiticity_residual = std::max(out.hermiticity_residual, op.hermiticity_residual);
          out.scale = std::max(out.scale, op.scale);
          out.dropped_coupling = std::max(out.dropped_coupling, op.dropped_coupling);
        }
        return out;
      },
      policy);
}

/// Reparameterized sub-path s -> path(a + s (b - a)).
inline OperatorPath restrict_path(const OperatorPath& path, double a, double b) {
  return OperatorPath(
      path.dim(), path.labels(), [path, a, b](double s) { return path.evaluate(a + s * (b - a)); },
      path.policy());
}

}  // namespace sflow
