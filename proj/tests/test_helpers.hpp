#pragma once

#include <Eigen/Dense>

#include "mtse/matrix_core.hpp"
#include "mtse/rng.hpp"
#include "mtse/sampling.hpp"

namespace mtse::testing {

inline Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, RandomStream& rng) {
  return standard_normal_matrix(rows, cols, rng);
}

inline SymMatrix random_symmetric(Eigen::Index p, RandomStream& rng) {
  return SymMatrix::symmetrize(random_matrix(p, p, rng));
}

inline SymMatrix random_spd(Eigen::Index p, RandomStream& rng) {
  const Eigen::MatrixXd a = random_matrix(p, p, rng);
  return SymMatrix::symmetrize(a * a.transpose() / static_cast<double>(p) +
                               Eigen::MatrixXd::Identity(p, p));
}

/// Random symmetric matrix scaled to unit scaled norm (indefinite in general).
inline SymMatrix random_unit_target(Eigen::Index p, RandomStream& rng) {
  const SymMatrix t = random_symmetric(p, rng);
  return t * (1.0 / scaled_norm(t));
}

}  // namespace mtse::testing
