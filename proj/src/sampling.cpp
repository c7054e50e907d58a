#include "mtse/sampling.hpp"

#include <cmath>
#include <random>
#include <string>

namespace mtse {

Eigen::MatrixXd standard_normal_matrix(Eigen::Index p, Eigen::Index cols, RandomStream& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd z(p, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < p; ++i) z(i, j) = normal(rng);
  }
  return z;
}

Eigen::MatrixXd psd_factor(const SymMatrix& a) {
  Eigen::LLT<Eigen::MatrixXd> llt(a.matrix());
  if (llt.info() == Eigen::Success) return llt.matrixL();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(a.matrix());
  if (solver.info() != Eigen::Success) throw NumericalError("psd_factor: eigensolver failed");
  const Eigen::VectorXd& lambda = solver.eigenvalues();
  const double scale = std::max(1.0, lambda.cwiseAbs().maxCoeff());
  if (lambda.minCoeff() < -1e-10 * scale) {
    throw InputError("matrix is not positive semi-definite (min eigenvalue " +
                     std::to_string(lambda.minCoeff()) + ")");
  }
  return solver.eigenvectors() * lambda.cwiseMax(0.0).cwiseSqrt().asDiagonal();
}

SymMatrix sample_wishart(const SymMatrix& scale, int dof, RandomStream& rng) {
  if (dof < 1) throw InputError("sample_wishart: dof must be >= 1");
  const Eigen::MatrixXd factor = psd_factor(scale);
  const Eigen::MatrixXd g = factor * standard_normal_matrix(scale.dim(), dof, rng);
  return SymMatrix::symmetrize(g * g.transpose());
}

ObservationMatrix sample_multivariate_t(const SymMatrix& sigma, double nu, Eigen::Index n,
                                        RandomStream& rng) {
  if (!(nu > 2.0)) throw InputError("sample_multivariate_t: nu must be > 2");
  if (n < 1) throw InputError("sample_multivariate_t: n must be >= 1");
  const Eigen::MatrixXd factor = psd_factor(sigma * ((nu - 2.0) / nu));
  Eigen::MatrixXd x = factor * standard_normal_matrix(sigma.dim(), n, rng);
  std::chi_squared_distribution<double> chi2(nu);
  for (Eigen::Index k = 0; k < n; ++k) x.col(k) *= std::sqrt(nu / chi2(rng));
  return ObservationMatrix(std::move(x), Eigen::VectorXd::Zero(sigma.dim()));
}

ObservationMatrix sample_gaussian(const SymMatrix& sigma, Eigen::Index n, RandomStream& rng) {
  if (n < 1) throw InputError("sample_gaussian: n must be >= 1");
  Eigen::MatrixXd x = psd_factor(sigma) * standard_normal_matrix(sigma.dim(), n, rng);
  return ObservationMatrix(std::move(x), Eigen::VectorXd::Zero(sigma.dim()));
}

}  // namespace mtse
