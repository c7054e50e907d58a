#pragma once

#include <optional>

#include <Eigen/Dense>

#include "mtse/error.hpp"

namespace mtse {

enum class MeanMode { Known, Unknown };

/// p x n observation matrix, one observation per column. In Known mode the
/// population mean is supplied; in Unknown mode rows are centered empirically.
class ObservationMatrix {
 public:
  /// Known mean.
  ObservationMatrix(Eigen::MatrixXd data, Eigen::VectorXd mean);
  /// Unknown mean.
  explicit ObservationMatrix(Eigen::MatrixXd data);

  Eigen::Index p() const { return data_.rows(); }
  Eigen::Index n() const { return data_.cols(); }
  MeanMode mode() const { return mean_ ? MeanMode::Known : MeanMode::Unknown; }
  const Eigen::MatrixXd& data() const { return data_; }
  const std::optional<Eigen::VectorXd>& known_mean() const { return mean_; }

  /// X - mu (known) or X - row means (unknown).
  Eigen::MatrixXd centered() const;

 private:
  Eigen::MatrixXd data_;
  std::optional<Eigen::VectorXd> mean_;
};

}  // namespace mtse
