#include "nsbi/core/trainset.hpp"

#include <stdexcept>

namespace nsbi {

void TrainSet::append(const Mat& new_theta, const Mat& new_features, int round_index) {
  if (new_theta.rows() != new_features.rows()) throw std::invalid_argument("theta and feature row counts differ");
  if (size() > 0 && (new_theta.cols() != theta.cols() || new_features.cols() != features.cols())) {
    throw std::invalid_argument("appended rows do not match the training set widths");
  }
  const Eigen::Index n0 = size();
  Mat t(n0 + new_theta.rows(), new_theta.cols());
  Mat f(n0 + new_features.rows(), new_features.cols());
  if (n0 > 0) {
    t.topRows(n0) = theta;
    f.topRows(n0) = features;
  }
  t.bottomRows(new_theta.rows()) = new_theta;
  f.bottomRows(new_features.rows()) = new_features;
  theta = std::move(t);
  features = std::move(f);
  round.insert(round.end(), static_cast<std::size_t>(new_theta.rows()), round_index);
}

}  // namespace nsbi
