#include "nsbi/diffcore/eigen_bridge.hpp"

#include <stdexcept>

namespace nsbi::diff {

Tensor from_matrix(const Mat& m) {
  Tensor t(Shape{static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())});
  Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(t.data().data(), m.rows(), m.cols()) = m;
  return t;
}

Tensor from_vector(const Vec& v) { return Tensor::vector(std::vector<double>(v.data(), v.data() + v.size())); }

Mat to_matrix(const Tensor& t) {
  if (t.shape().rank() != 2) throw std::invalid_argument("to_matrix expects rank 2, got " + t.shape().str());
  return Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      t.data().data(), static_cast<Eigen::Index>(t.shape()[0]), static_cast<Eigen::Index>(t.shape()[1]));
}

Vec to_vector(const Tensor& t) { return Eigen::Map<const Vec>(t.data().data(), static_cast<Eigen::Index>(t.size())); }

}  // namespace nsbi::diff
