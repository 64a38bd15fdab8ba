#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

namespace nsbi {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// T x d simulator output, one row per time step.
struct TimeSeries {
  Mat data;
  double dt = 1.0;
  std::vector<std::string> columns;

  [[nodiscard]] Eigen::Index length() const { return data.rows(); }
  [[nodiscard]] Eigen::Index dim() const { return data.cols(); }
};

/// Rows are parameter points.
using SampleSet = Mat;

}  // namespace nsbi
