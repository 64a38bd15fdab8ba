#pragma once

#include <vector>

#include "nsbi/core/types.hpp"

namespace nsbi {

/// Accumulated (theta, features) pairs with the round that produced each pair.
struct TrainSet {
  Mat theta;
  Mat features;
  std::vector<int> round;

  [[nodiscard]] Eigen::Index size() const { return theta.rows(); }
  void append(const Mat& new_theta, const Mat& new_features, int round_index);
};

}  // namespace nsbi
