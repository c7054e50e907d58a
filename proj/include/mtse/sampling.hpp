#pragma once

#include "mtse/matrix_core.hpp"
#include "mtse/observations.hpp"
#include "mtse/rng.hpp"

namespace mtse {

/// p x cols matrix of i.i.d. standard normals.
Eigen::MatrixXd standard_normal_matrix(Eigen::Index p, Eigen::Index cols, RandomStream& rng);

/// G G^T where the dof columns of G are i.i.d. N(0, scale).
SymMatrix sample_wishart(const SymMatrix& scale, int dof, RandomStream& rng);

/// n zero-mean multivariate t draws with covariance exactly Sigma:
/// X_k = L z_k sqrt(nu / w_k), L L^T = (nu - 2) / nu * Sigma, w_k ~ chi2(nu).
/// Returned in known-mean form (mean 0).
ObservationMatrix sample_multivariate_t(const SymMatrix& sigma, double nu, Eigen::Index n,
                                        RandomStream& rng);

/// Gaussian counterpart of sample_multivariate_t.
ObservationMatrix sample_gaussian(const SymMatrix& sigma, Eigen::Index n, RandomStream& rng);

/// Square-root factor L with L L^T = A for PSD A (eigen-based, tolerates rank deficiency).
Eigen::MatrixXd psd_factor(const SymMatrix& a);

}  // namespace mtse
