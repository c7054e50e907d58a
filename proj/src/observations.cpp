#include "mtse/observations.hpp"

#include <string>

namespace mtse {

ObservationMatrix::ObservationMatrix(Eigen::MatrixXd data, Eigen::VectorXd mean)
    : data_(std::move(data)), mean_(std::move(mean)) {
  if (data_.rows() < 1 || data_.cols() < 1) {
    throw InputError("ObservationMatrix: need p >= 1 and n >= 1");
  }
  if (mean_->size() != data_.rows()) {
    throw InputError("ObservationMatrix: known mean has length " + std::to_string(mean_->size()) +
                     ", expected p = " + std::to_string(data_.rows()));
  }
  if (!data_.allFinite() || !mean_->allFinite()) {
    throw InputError("ObservationMatrix: non-finite value");
  }
}

ObservationMatrix::ObservationMatrix(Eigen::MatrixXd data) : data_(std::move(data)) {
  if (data_.rows() < 1 || data_.cols() < 1) {
    throw InputError("ObservationMatrix: need p >= 1 and n >= 1");
  }
  if (!data_.allFinite()) throw InputError("ObservationMatrix: non-finite value");
}

Eigen::MatrixXd ObservationMatrix::centered() const {
  if (mean_) return data_.colwise() - *mean_;
  const Eigen::VectorXd row_means = data_.rowwise().mean();
  return data_.colwise() - row_means;
}

}  // namespace mtse
