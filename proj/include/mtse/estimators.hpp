#pragma once

#include <vector>

#include "mtse/matrix_core.hpp"
#include "mtse/observations.hpp"
#include "mtse/targets.hpp"

namespace mtse {

/// Output of a shrinkage fit. `unprojected` is the linear combination
/// c0 * S + sum_i c_i * T_i before the PSD projection; `estimate` is after it.
struct ShrinkageResult {
  SymMatrix estimate;
  SymMatrix unprojected;
  double c0 = 1.0;
  double c0_unclamped = 1.0;
  std::vector<double> c_targets;
  double d_squared = 0.0;
  // Variance estimates; NaN for the oracle, which does not need them.
  double vhat_S = 0.0;
  std::vector<double> vhat_proj;
  bool fallback_used = false;
};

/// Smallest n accepted by the variance estimators: 2 with a known mean, 4 without.
Eigen::Index minimum_observations(MeanMode mode);

/// Known mean: (X - mu)(X - mu)^T / n. Unknown mean: Xc Xc^T / (n - 1).
SymMatrix sample_covariance(const ObservationMatrix& x);

/// Unbiased estimate of E|S - Sigma|^2.
double vhat_S(const ObservationMatrix& x, const SymMatrix& s);

/// Unbiased estimate of E<S - Sigma, T>^2, quadratic forms through the
/// complex root of T.
double vhat_proj(const ObservationMatrix& x, const SymMatrix& s, const SymMatrix& t);
double vhat_proj(const ObservationMatrix& x, const SymMatrix& s, const SymMatrix& t,
                 const ComplexSqrtFactor& root);

/// Column quadratic forms x_k^T T x_k, as sums of complex squares of R x_k.
/// Throws NumericalError if the imaginary residue is above tolerance.
Eigen::VectorXd quadratic_forms(const Eigen::MatrixXd& columns, const ComplexSqrtFactor& root,
                                const Tolerances& tol = default_tolerances());
/// Same quantity by explicit double loop; reference path for tests.
Eigen::VectorXd quadratic_forms_naive(const Eigen::MatrixXd& columns, const SymMatrix& t);

/// Oracle coefficients from the true covariance: the orthogonal projection
/// of Sigma onto span{S, T_1..T_N}, followed by PSD projection.
ShrinkageResult oracle_mtse(const SymMatrix& s, const TargetSet& targets, const SymMatrix& sigma,
                            const Tolerances& tol = default_tolerances());

/// Bona fide multi-target shrinkage estimator.
ShrinkageResult mtse(const ObservationMatrix& x, const TargetSet& targets,
                     const Tolerances& tol = default_tolerances());

/// Ledoit-Wolf baseline: mtse with the identity as single target.
ShrinkageResult lw_estimator(const ObservationMatrix& x,
                             const Tolerances& tol = default_tolerances());

TargetSet identity_target(Eigen::Index p);

}  // namespace mtse
