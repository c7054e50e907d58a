#pragma once

#include <complex>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "mtse/error.hpp"

namespace mtse {

/// Numerical thresholds shared by the whole library. Defaults are the
/// documented constants; callers may pass an adjusted copy.
struct Tolerances {
  double symmetry = 1e-12;         // relative asymmetry accepted by SymMatrix
  double psd_residue = 1e-10;      // negative eigenvalue residue tolerated after projection
  double gram_schmidt_drop = 1e-10;  // relative residual norm below which a member is dropped
  double pinv_rtol_per_dim = 1e-12;  // pseudo-inverse cutoff is this times p times max|lambda|
  double degeneracy = 1e-12;       // d^2 <= degeneracy * max(1, |S|^2) triggers the fallback
  double complex_residue = 1e-8;   // imaginary residue accepted from the complex root path
};

const Tolerances& default_tolerances();

/// Dense symmetric p x p matrix. Construction checks symmetry and then
/// stores the exactly symmetrized (A + A^T) / 2.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(Eigen::MatrixXd values,
                     const Tolerances& tol = default_tolerances());

  static SymMatrix identity(Eigen::Index p);
  static SymMatrix zero(Eigen::Index p);
  static SymMatrix diagonal(std::span<const double> diag);
  // Symmetrizes without checking; for results of products that are symmetric
  // only up to roundoff.
  static SymMatrix symmetrize(const Eigen::MatrixXd& values);

  Eigen::Index dim() const { return values_.rows(); }
  const Eigen::MatrixXd& matrix() const { return values_; }
  double operator()(Eigen::Index i, Eigen::Index j) const { return values_(i, j); }

  SymMatrix operator+(const SymMatrix& other) const;
  SymMatrix operator-(const SymMatrix& other) const;
  SymMatrix operator*(double scale) const;

 private:
  Eigen::MatrixXd values_;
};

inline SymMatrix operator*(double scale, const SymMatrix& m) { return m * scale; }

/// Symmetric matrix root R (R^T = R, not Hermitian) with R * R = T, built from
/// principal complex square roots of the eigenvalues.
struct ComplexSqrtFactor {
  Eigen::MatrixXcd root;
  Eigen::Index dim() const { return root.rows(); }
};

/// <A, B> = Tr(A B^T) / p, so that |I| = 1 in every dimension.
double scaled_inner(const SymMatrix& a, const SymMatrix& b);
double scaled_norm_sq(const SymMatrix& a);
double scaled_norm(const SymMatrix& a);

/// Nearest PSD matrix in Frobenius distance: negative eigenvalues set to 0.
SymMatrix psd_project(const SymMatrix& a);

/// Modified Gram-Schmidt with one re-orthogonalization pass, under the scaled
/// inner product. Order is preserved; near-dependent members are dropped.
std::vector<SymMatrix> gram_schmidt(std::span<const SymMatrix> family,
                                    const Tolerances& tol = default_tolerances());

ComplexSqrtFactor complex_sqrt_factor(const SymMatrix& t);

/// Moore-Penrose inverse; eigenvalues with |lambda| <= 1e-12 * p * max|lambda|
/// are treated as zero.
SymMatrix pseudo_inverse(const SymMatrix& a, const Tolerances& tol = default_tolerances());

double min_eigenvalue(const SymMatrix& a);

}  // namespace mtse
