#include "mtse/matrix_core.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace mtse {

namespace {

Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eigendecompose(const SymMatrix& a) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(a.matrix());
  if (solver.info() != Eigen::Success) {
    throw NumericalError("symmetric eigendecomposition failed (dim " +
                         std::to_string(a.dim()) + ")");
  }
  return solver;
}

void require_same_dim(const SymMatrix& a, const SymMatrix& b, const char* what) {
  if (a.dim() != b.dim()) {
    throw InputError(std::string(what) + ": dimension mismatch (" + std::to_string(a.dim()) +
                     " vs " + std::to_string(b.dim()) + ")");
  }
}

}  // namespace

const Tolerances& default_tolerances() {
  static const Tolerances tol{};
  return tol;
}

SymMatrix::SymMatrix(Eigen::MatrixXd values, const Tolerances& tol) {
  if (values.rows() != values.cols()) throw InputError("SymMatrix: matrix is not square");
  if (values.rows() < 1) throw InputError("SymMatrix: dimension must be at least 1");
  if (!values.allFinite()) throw InputError("SymMatrix: non-finite entry");
  const double scale = std::max(1.0, values.cwiseAbs().maxCoeff());
  const double asym = (values - values.transpose()).cwiseAbs().maxCoeff();
  if (asym > tol.symmetry * scale) {
    throw InputError("SymMatrix: matrix is not symmetric (max asymmetry " +
                     std::to_string(asym) + ")");
  }
  values_ = 0.5 * (values + values.transpose());
}

SymMatrix SymMatrix::identity(Eigen::Index p) {
  return SymMatrix(Eigen::MatrixXd::Identity(p, p));
}

SymMatrix SymMatrix::zero(Eigen::Index p) { return SymMatrix(Eigen::MatrixXd::Zero(p, p)); }

SymMatrix SymMatrix::diagonal(std::span<const double> diag) {
  Eigen::VectorXd d(static_cast<Eigen::Index>(diag.size()));
  for (std::size_t i = 0; i < diag.size(); ++i) d(static_cast<Eigen::Index>(i)) = diag[i];
  return SymMatrix(Eigen::MatrixXd(d.asDiagonal()));
}

SymMatrix SymMatrix::symmetrize(const Eigen::MatrixXd& values) {
  if (values.rows() != values.cols() || values.rows() < 1) {
    throw InputError("SymMatrix: matrix must be square with dimension >= 1");
  }
  SymMatrix out;
  out.values_ = 0.5 * (values + values.transpose());
  return out;
}

SymMatrix SymMatrix::operator+(const SymMatrix& other) const {
  require_same_dim(*this, other, "SymMatrix::operator+");
  SymMatrix out;
  out.values_ = values_ + other.values_;
  return out;
}

SymMatrix SymMatrix::operator-(const SymMatrix& other) const {
  require_same_dim(*this, other, "SymMatrix::operator-");
  SymMatrix out;
  out.values_ = values_ - other.values_;
  return out;
}

SymMatrix SymMatrix::operator*(double scale) const {
  SymMatrix out;
  out.values_ = values_ * scale;
  return out;
}

double scaled_inner(const SymMatrix& a, const SymMatrix& b) {
  require_same_dim(a, b, "scaled_inner");
  // Tr(A B^T) is the sum of the elementwise product.
  return a.matrix().cwiseProduct(b.matrix()).sum() / static_cast<double>(a.dim());
}

double scaled_norm_sq(const SymMatrix& a) {
  return a.matrix().squaredNorm() / static_cast<double>(a.dim());
}

double scaled_norm(const SymMatrix& a) { return std::sqrt(scaled_norm_sq(a)); }

SymMatrix psd_project(const SymMatrix& a) {
  const auto solver = eigendecompose(a);
  const Eigen::VectorXd clipped = solver.eigenvalues().cwiseMax(0.0);
  const Eigen::MatrixXd& q = solver.eigenvectors();
  return SymMatrix::symmetrize(q * clipped.asDiagonal() * q.transpose());
}

std::vector<SymMatrix> gram_schmidt(std::span<const SymMatrix> family, const Tolerances& tol) {
  if (family.empty()) throw InputError("gram_schmidt: empty target family");
  const Eigen::Index p = family.front().dim();
  std::vector<SymMatrix> basis;
  basis.reserve(family.size());
  for (std::size_t idx = 0; idx < family.size(); ++idx) {
    const SymMatrix& member = family[idx];
    if (member.dim() != p) {
      throw InputError("gram_schmidt: member " + std::to_string(idx) + " has dimension " +
                       std::to_string(member.dim()) + ", expected " + std::to_string(p));
    }
    const double original = scaled_norm(member);
    if (original == 0.0) {
      throw InputError("gram_schmidt: member " + std::to_string(idx) + " is the zero matrix");
    }
    Eigen::MatrixXd residual = member.matrix();
    // Two sweeps: the second removes what roundoff left behind in the first.
    for (int sweep = 0; sweep < 2; ++sweep) {
      for (const auto& q : basis) {
        const double coef = residual.cwiseProduct(q.matrix()).sum() / static_cast<double>(p);
        residual -= coef * q.matrix();
      }
    }
    const double norm = std::sqrt(residual.squaredNorm() / static_cast<double>(p));
    if (norm <= tol.gram_schmidt_drop * original) continue;
    basis.push_back(SymMatrix::symmetrize(residual / norm));
  }
  if (basis.empty()) throw InputError("gram_schmidt: family reduced to the empty set");
  return basis;
}

ComplexSqrtFactor complex_sqrt_factor(const SymMatrix& t) {
  const auto solver = eigendecompose(t);
  const Eigen::VectorXcd roots = solver.eigenvalues().cast<std::complex<double>>().cwiseSqrt();
  const Eigen::MatrixXcd q = solver.eigenvectors().cast<std::complex<double>>();
  return ComplexSqrtFactor{q * roots.asDiagonal() * q.transpose()};
}

SymMatrix pseudo_inverse(const SymMatrix& a, const Tolerances& tol) {
  const auto solver = eigendecompose(a);
  const Eigen::VectorXd& lambda = solver.eigenvalues();
  const double cutoff =
      tol.pinv_rtol_per_dim * static_cast<double>(a.dim()) * lambda.cwiseAbs().maxCoeff();
  Eigen::VectorXd inv(lambda.size());
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    inv(i) = std::abs(lambda(i)) <= cutoff ? 0.0 : 1.0 / lambda(i);
  }
  const Eigen::MatrixXd& q = solver.eigenvectors();
  return SymMatrix::symmetrize(q * inv.asDiagonal() * q.transpose());
}

double min_eigenvalue(const SymMatrix& a) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(a.matrix(), Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw NumericalError("min_eigenvalue: eigensolver failed");
  return solver.eigenvalues().minCoeff();
}

}  // namespace mtse
