#pragma once

#include <string>
#include <vector>

#include "mtse/matrix_core.hpp"
#include "mtse/rng.hpp"

namespace mtse {

/// Orthonormal (under scaled_inner) family of symmetric targets, each carried
/// with its complex square root so quadratic forms x^T T x can be evaluated
/// as sums of complex squares.
class TargetSet {
 public:
  /// Orthonormalizes `family` (order preserved) and records `provenance`.
  static TargetSet orthonormalize(std::span<const SymMatrix> family, std::string provenance,
                                  const Tolerances& tol = default_tolerances());
  /// Wraps a family the caller guarantees is already orthonormal; checked.
  static TargetSet from_orthonormal(std::vector<SymMatrix> members, std::string provenance);

  Eigen::Index dim() const { return members_.front().dim(); }
  std::size_t size() const { return members_.size(); }
  const SymMatrix& operator[](std::size_t i) const { return members_[i]; }
  const std::vector<SymMatrix>& members() const { return members_; }
  const ComplexSqrtFactor& root(std::size_t i) const { return roots_[i]; }
  const std::string& provenance() const { return provenance_; }

  /// First `count` members. Gram-Schmidt is order preserving, so this equals
  /// orthonormalizing the first `count` raw targets.
  TargetSet prefix(std::size_t count) const;

  /// Gram matrix of the members; the identity for a valid set.
  Eigen::MatrixXd gram() const;

 private:
  TargetSet(std::vector<SymMatrix> members, std::string provenance);

  std::vector<SymMatrix> members_;
  std::vector<ComplexSqrtFactor> roots_;
  std::string provenance_;
};

/// Identity first, then one identity block for each of blocks 2..B.
TargetSet block_identity_targets(const std::vector<int>& block_sizes);

/// Rows and columns moved by sigma(j) = (j + shift) mod p.
TargetSet permuted_targets(const TargetSet& base, long shift);

/// `count` draws W / |W| with W ~ Wishart(I_p, p), orthonormalized after the
/// members of `base` (if given).
TargetSet random_wishart_targets(Eigen::Index p, int count, RandomStream& rng,
                                 const TargetSet* base = nullptr);

/// One normalized 0/1 diagonal target per distinct label, in first-appearance order.
TargetSet sector_targets(const std::vector<std::string>& labels);

}  // namespace mtse
