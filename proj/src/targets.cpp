#include "mtse/targets.hpp"

#include <cmath>
#include <numeric>
#include <unordered_map>

#include "mtse/sampling.hpp"

namespace mtse {

namespace {

constexpr double kOrthonormalCheck = 1e-10;

void check_orthonormal(const std::vector<SymMatrix>& members) {
  const std::size_t count = members.size();
  for (std::size_t i = 0; i < count; ++i) {
    for (std::size_t j = i; j < count; ++j) {
      const double g = scaled_inner(members[i], members[j]);
      const double expected = i == j ? 1.0 : 0.0;
      if (std::abs(g - expected) > kOrthonormalCheck) {
        throw InputError("TargetSet: members " + std::to_string(i) + " and " + std::to_string(j) +
                         " are not orthonormal (inner product " + std::to_string(g) + ")");
      }
    }
  }
}

}  // namespace

TargetSet::TargetSet(std::vector<SymMatrix> members, std::string provenance)
    : members_(std::move(members)), provenance_(std::move(provenance)) {
  if (members_.empty()) throw InputError("TargetSet: at least one target is required");
  roots_.reserve(members_.size());
  for (const auto& m : members_) roots_.push_back(complex_sqrt_factor(m));
}

TargetSet TargetSet::orthonormalize(std::span<const SymMatrix> family, std::string provenance,
                                    const Tolerances& tol) {
  return TargetSet(gram_schmidt(family, tol), std::move(provenance));
}

TargetSet TargetSet::from_orthonormal(std::vector<SymMatrix> members, std::string provenance) {
  if (members.empty()) throw InputError("TargetSet: at least one target is required");
  for (const auto& m : members) {
    if (m.dim() != members.front().dim()) throw InputError("TargetSet: mixed dimensions");
  }
  check_orthonormal(members);
  return TargetSet(std::move(members), std::move(provenance));
}

TargetSet TargetSet::prefix(std::size_t count) const {
  if (count < 1 || count > members_.size()) {
    throw InputError("TargetSet::prefix: count " + std::to_string(count) + " outside [1, " +
                     std::to_string(members_.size()) + "]");
  }
  TargetSet out = *this;
  out.members_.resize(count);
  out.roots_.resize(count);
  out.provenance_ += "[:" + std::to_string(count) + "]";
  return out;
}

Eigen::MatrixXd TargetSet::gram() const {
  const auto count = static_cast<Eigen::Index>(members_.size());
  Eigen::MatrixXd g(count, count);
  for (Eigen::Index i = 0; i < count; ++i) {
    for (Eigen::Index j = 0; j < count; ++j) {
      g(i, j) = scaled_inner(members_[static_cast<std::size_t>(i)],
                             members_[static_cast<std::size_t>(j)]);
    }
  }
  return g;
}

TargetSet block_identity_targets(const std::vector<int>& block_sizes) {
  if (block_sizes.empty()) throw InputError("block_identity_targets: no blocks");
  for (std::size_t b = 0; b < block_sizes.size(); ++b) {
    if (block_sizes[b] <= 0) {
      throw InputError("block_identity_targets: block " + std::to_string(b) +
                       " has non-positive size");
    }
  }
  const Eigen::Index p = std::accumulate(block_sizes.begin(), block_sizes.end(), Eigen::Index{0});
  std::vector<SymMatrix> raw;
  raw.push_back(SymMatrix::identity(p));
  Eigen::Index offset = block_sizes.front();
  for (std::size_t b = 1; b < block_sizes.size(); ++b) {
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(p, p);
    t.block(offset, offset, block_sizes[b], block_sizes[b]).setIdentity();
    raw.emplace_back(std::move(t));
    offset += block_sizes[b];
  }
  std::string provenance = "blocks(";
  for (std::size_t b = 0; b < block_sizes.size(); ++b) {
    provenance += (b ? "," : "") + std::to_string(block_sizes[b]);
  }
  return TargetSet::orthonormalize(raw, provenance + ")");
}

TargetSet permuted_targets(const TargetSet& base, long shift) {
  const Eigen::Index p = base.dim();
  const long s = ((shift % p) + p) % p;
  Eigen::VectorXi perm(p);
  for (Eigen::Index j = 0; j < p; ++j) perm(j) = static_cast<int>((j + s) % p);
  std::vector<SymMatrix> moved;
  moved.reserve(base.size());
  for (const auto& t : base.members()) {
    Eigen::MatrixXd out(p, p);
    for (Eigen::Index k = 0; k < p; ++k) {
      for (Eigen::Index l = 0; l < p; ++l) out(perm(k), perm(l)) = t(k, l);
    }
    moved.push_back(SymMatrix::symmetrize(out));
  }
  return TargetSet::from_orthonormal(std::move(moved),
                                     base.provenance() + "<<" + std::to_string(shift));
}

TargetSet random_wishart_targets(Eigen::Index p, int count, RandomStream& rng,
                                 const TargetSet* base) {
  constexpr int kMaxRetries = 10;
  if (count < 1) throw InputError("random_wishart_targets: count must be >= 1");
  if (base && base->dim() != p) throw InputError("random_wishart_targets: base dimension mismatch");
  const Tolerances& tol = default_tolerances();
  const SymMatrix scale = SymMatrix::identity(p);

  std::vector<SymMatrix> basis = base ? base->members() : std::vector<SymMatrix>{};
  const std::size_t wanted = basis.size() + static_cast<std::size_t>(count);
  int retries = 0;
  while (basis.size() < wanted) {
    SymMatrix w = sample_wishart(scale, static_cast<int>(p), rng);
    const double norm = scaled_norm(w);
    if (norm > 0.0) {
      std::vector<SymMatrix> candidate = basis;
      candidate.push_back(w * (1.0 / norm));
      candidate = gram_schmidt(candidate, tol);
      if (candidate.size() == basis.size() + 1) {
        basis = std::move(candidate);
        continue;
      }
    }
    if (++retries > kMaxRetries) {
      throw NumericalError("random_wishart_targets: degenerate draws exceeded retry limit");
    }
  }
  return TargetSet::from_orthonormal(
      std::move(basis),
      (base ? base->provenance() + "+" : std::string{}) + "wishart(" + std::to_string(count) + ")");
}

TargetSet sector_targets(const std::vector<std::string>& labels) {
  if (labels.empty()) throw InputError("sector_targets: no labels (p = 0)");
  const auto p = static_cast<Eigen::Index>(labels.size());
  std::vector<std::string> order;
  std::unordered_map<std::string, std::size_t> slot;
  for (const auto& label : labels) {
    if (label.empty()) throw InputError("sector_targets: empty label");
    if (slot.emplace(label, order.size()).second) order.push_back(label);
  }
  std::vector<Eigen::VectorXd> diagonals(order.size(), Eigen::VectorXd::Zero(p));
  for (Eigen::Index i = 0; i < p; ++i) diagonals[slot.at(labels[static_cast<std::size_t>(i)])](i) = 1.0;

  std::vector<SymMatrix> members;
  members.reserve(order.size());
  for (auto& d : diagonals) {
    // |diag(d)|^2 = count / p
    const double norm = std::sqrt(d.sum() / static_cast<double>(p));
    members.push_back(SymMatrix::symmetrize(Eigen::MatrixXd((d / norm).asDiagonal())));
  }
  std::string provenance = "sectors(";
  for (std::size_t i = 0; i < order.size(); ++i) provenance += (i ? "," : "") + order[i];
  return TargetSet::from_orthonormal(std::move(members), provenance + ")");
}

}  // namespace mtse
