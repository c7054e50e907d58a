#include "mtse/estimators.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace mtse {

namespace {

void require_observations(const ObservationMatrix& x, const char* what) {
  const Eigen::Index needed = minimum_observations(x.mode());
  if (x.n() < needed) {
    throw InputError(std::string(what) + ": need n >= " + std::to_string(needed) + " (" +
                     (x.mode() == MeanMode::Known ? "known" : "unknown") + " mean), got n = " +
                     std::to_string(x.n()));
  }
}

void require_dim(Eigen::Index expected, Eigen::Index got, const char* what) {
  if (expected != got) {
    throw InputError(std::string(what) + ": dimension mismatch (" + std::to_string(expected) +
                     " vs " + std::to_string(got) + ")");
  }
}

struct Projections {
  std::vector<double> values;
  double sum_sq = 0.0;
};

Projections project(const SymMatrix& m, const TargetSet& targets) {
  Projections out;
  out.values.reserve(targets.size());
  for (const auto& t : targets.members()) {
    const double v = scaled_inner(m, t);
    out.values.push_back(v);
    out.sum_sq += v * v;
  }
  return out;
}

SymMatrix combine(const SymMatrix& s, double c0, const TargetSet& targets,
                  const std::vector<double>& coefs) {
  Eigen::MatrixXd out = c0 * s.matrix();
  for (std::size_t i = 0; i < targets.size(); ++i) out += coefs[i] * targets[i].matrix();
  return SymMatrix::symmetrize(out);
}

bool degenerate(double d_squared, double norm_sq, const Tolerances& tol) {
  return d_squared <= tol.degeneracy * std::max(1.0, norm_sq);
}

}  // namespace

Eigen::Index minimum_observations(MeanMode mode) { return mode == MeanMode::Known ? 2 : 4; }

SymMatrix sample_covariance(const ObservationMatrix& x) {
  const Eigen::MatrixXd c = x.centered();
  const double denom = x.mode() == MeanMode::Known ? static_cast<double>(x.n())
                                                   : static_cast<double>(x.n() - 1);
  if (x.mode() == MeanMode::Unknown && x.n() < 2) {
    throw InputError("sample_covariance: unknown mean requires n >= 2");
  }
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(x.p(), x.p());
  s.selfadjointView<Eigen::Lower>().rankUpdate(c, 1.0 / denom);
  return SymMatrix::symmetrize(s.selfadjointView<Eigen::Lower>());
}

double vhat_S(const ObservationMatrix& x, const SymMatrix& s) {
  require_observations(x, "vhat_S");
  require_dim(x.p(), s.dim(), "vhat_S");
  const double n = static_cast<double>(x.n());
  const double p = static_cast<double>(x.p());
  const Eigen::MatrixXd c = x.centered();
  const Eigen::RowVectorXd sq_norms = c.colwise().squaredNorm();
  const Eigen::RowVectorXd s_forms = c.cwiseProduct(s.matrix() * c).colwise().sum();
  const double frob_sq = s.matrix().squaredNorm();

  if (x.mode() == MeanMode::Known) {
    // |x x^T - S|_F^2 = |x|^4 - 2 x^T S x + |S|_F^2
    const double total =
        sq_norms.array().square().sum() - 2.0 * s_forms.sum() + n * frob_sq;
    return total / p / (n * (n - 1.0));
  }

  const double a = n / (n - 1.0);
  const double b_bar_sq =
      (a * a * sq_norms.array().square().sum() - 2.0 * a * s_forms.sum() + n * frob_sq) / p /
      (n * n);
  const double trace_term = s.matrix().trace() / p;  // <S, I>
  return (n - 1.0) * (n - 1.0) / ((n - 2.0) * (n - 3.0)) * b_bar_sq -
         scaled_norm_sq(s) / (n * (n - 2.0)) -
         (n - 1.0) / (n * (n - 2.0) * (n - 3.0)) * p * trace_term * trace_term;
}

Eigen::VectorXd quadratic_forms(const Eigen::MatrixXd& columns, const ComplexSqrtFactor& root,
                                const Tolerances& tol) {
  require_dim(root.dim(), columns.rows(), "quadratic_forms");
  const Eigen::MatrixXcd rx = root.root * columns.cast<std::complex<double>>();
  Eigen::VectorXd out(columns.cols());
  for (Eigen::Index k = 0; k < columns.cols(); ++k) {
    const std::complex<double> q = rx.col(k).array().square().sum();
    const double magnitude = rx.col(k).squaredNorm();
    if (std::abs(q.imag()) > tol.complex_residue * std::max(magnitude, 1e-300)) {
      throw NumericalError("quadratic_forms: imaginary residue " + std::to_string(q.imag()) +
                           " exceeds tolerance in column " + std::to_string(k));
    }
    out(k) = q.real();
  }
  return out;
}

Eigen::VectorXd quadratic_forms_naive(const Eigen::MatrixXd& columns, const SymMatrix& t) {
  require_dim(t.dim(), columns.rows(), "quadratic_forms_naive");
  Eigen::VectorXd out(columns.cols());
  for (Eigen::Index k = 0; k < columns.cols(); ++k) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < columns.rows(); ++i) {
      for (Eigen::Index j = 0; j < columns.rows(); ++j) {
        acc += columns(i, k) * t(i, j) * columns(j, k);
      }
    }
    out(k) = acc;
  }
  return out;
}

double vhat_proj(const ObservationMatrix& x, const SymMatrix& s, const SymMatrix& t) {
  return vhat_proj(x, s, t, complex_sqrt_factor(t));
}

double vhat_proj(const ObservationMatrix& x, const SymMatrix& s, const SymMatrix& t,
                 const ComplexSqrtFactor& root) {
  require_observations(x, "vhat_proj");
  require_dim(x.p(), s.dim(), "vhat_proj");
  require_dim(x.p(), t.dim(), "vhat_proj");
  require_dim(x.p(), root.dim(), "vhat_proj");
  const double n = static_cast<double>(x.n());
  const double p = static_cast<double>(x.p());
  // <x x^T, T> = x^T T x / p
  const Eigen::ArrayXd inner = quadratic_forms(x.centered(), root).array() / p;
  const double s_t = scaled_inner(s, t);

  if (x.mode() == MeanMode::Known) {
    return (inner - s_t).square().sum() / (n * (n - 1.0));
  }

  const Eigen::MatrixXd st = s.matrix() * t.matrix();
  // <S T, T S> = Tr(S T S T) / p
  const double stts = st.cwiseProduct(st.transpose()).sum() / p;
  const double b_bar_sq = p / ((n - 1.0) * (n - 1.0)) * inner.square().sum() - stts / n;
  const double q0 = (n - 1.0) * (n - 1.0) / (p * (n - 2.0) * (n - 3.0));
  const double q1 = (n - 1.0) / (p * n * (n - 2.0));
  const double q2 = (n * n - 2.0 * n - 1.0) / (n * (n - 2.0) * (n - 3.0));
  return q0 * b_bar_sq + q1 * stts - q2 * s_t * s_t;
}

ShrinkageResult oracle_mtse(const SymMatrix& s, const TargetSet& targets, const SymMatrix& sigma,
                            const Tolerances& tol) {
  require_dim(s.dim(), sigma.dim(), "oracle_mtse");
  require_dim(s.dim(), targets.dim(), "oracle_mtse");
  const Projections s_proj = project(s, targets);
  const Projections sigma_proj = project(sigma, targets);
  const double norm_sq = scaled_norm_sq(s);

  ShrinkageResult out;
  out.vhat_S = std::numeric_limits<double>::quiet_NaN();
  out.d_squared = norm_sq - s_proj.sum_sq;
  if (degenerate(out.d_squared, norm_sq, tol)) {
    out.estimate = s;
    out.unprojected = s;
    out.c_targets.assign(targets.size(), 0.0);
    out.fallback_used = true;
    return out;
  }
  double cross = scaled_inner(s, sigma);
  for (std::size_t k = 0; k < targets.size(); ++k) cross -= s_proj.values[k] * sigma_proj.values[k];
  out.c0 = cross / out.d_squared;
  out.c0_unclamped = out.c0;
  out.c_targets.resize(targets.size());
  for (std::size_t i = 0; i < targets.size(); ++i) {
    out.c_targets[i] = sigma_proj.values[i] - out.c0 * s_proj.values[i];
  }
  out.unprojected = combine(s, out.c0, targets, out.c_targets);
  out.estimate = psd_project(out.unprojected);
  return out;
}

ShrinkageResult mtse(const ObservationMatrix& x, const TargetSet& targets, const Tolerances& tol) {
  require_observations(x, "mtse");
  require_dim(x.p(), targets.dim(), "mtse");
  const SymMatrix s = sample_covariance(x);
  const Projections s_proj = project(s, targets);
  const double norm_sq = scaled_norm_sq(s);

  ShrinkageResult out;
  out.d_squared = norm_sq - s_proj.sum_sq;
  out.vhat_S = vhat_S(x, s);
  out.vhat_proj.reserve(targets.size());
  double numerator = norm_sq - out.vhat_S;
  for (std::size_t k = 0; k < targets.size(); ++k) {
    out.vhat_proj.push_back(vhat_proj(x, s, targets[k], targets.root(k)));
    numerator -= s_proj.values[k] * s_proj.values[k] - out.vhat_proj.back();
  }

  if (degenerate(out.d_squared, norm_sq, tol)) {
    out.estimate = s;
    out.unprojected = s;
    out.c_targets.assign(targets.size(), 0.0);
    out.fallback_used = true;
    return out;
  }
  out.c0_unclamped = numerator / out.d_squared;
  out.c0 = std::min(std::max(out.c0_unclamped, 0.0), 1.0);
  out.c_targets.resize(targets.size());
  for (std::size_t i = 0; i < targets.size(); ++i) {
    out.c_targets[i] = (1.0 - out.c0) * s_proj.values[i];
  }
  out.unprojected = combine(s, out.c0, targets, out.c_targets);
  out.estimate = psd_project(out.unprojected);
  return out;
}

TargetSet identity_target(Eigen::Index p) {
  return TargetSet::from_orthonormal({SymMatrix::identity(p)}, "identity");
}

ShrinkageResult lw_estimator(const ObservationMatrix& x, const Tolerances& tol) {
  return mtse(x, identity_target(x.p()), tol);
}

}  // namespace mtse
