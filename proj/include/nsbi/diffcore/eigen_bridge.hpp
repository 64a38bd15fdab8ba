#pragma once

#include "nsbi/core/types.hpp"
#include "nsbi/diffcore/tensor.hpp"

namespace nsbi::diff {

Tensor from_matrix(const Mat& m);
Tensor from_vector(const Vec& v);
Mat to_matrix(const Tensor& t);
Vec to_vector(const Tensor& t);

}  // namespace nsbi::diff
