#include "nsbi/diffcore/layers.hpp"

#include <cmath>
#include <stdexcept>

namespace nsbi::diff {

Tensor uniform_init(Shape shape, std::size_t fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Tensor t(shape);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = dist(rng);
  return t;
}

Linear::Linear(ParamStore& store, const std::string& prefix, std::size_t in, std::size_t out, Rng& rng,
               bool bias)
    : in_(in), out_(out) {
  w_ = store.add(prefix + ".weight", uniform_init(Shape{in, out}, in, rng));
  if (bias) b_ = store.add(prefix + ".bias", uniform_init(Shape{out}, in, rng));
}

Var Linear::forward(const Var& x) const {
  Var y = matmul(x, w_);
  return b_ ? add(y, b_) : y;
}

void Linear::rescale(double factor) {
  for (double& v : w_.node()->value.data()) v *= factor;
  if (b_)
    for (double& v : b_.node()->value.data()) v *= factor;
}

MaskedLinear::MaskedLinear(ParamStore& store, const std::string& prefix, Tensor mask, Rng& rng) {
  if (mask.shape().rank() != 2) throw std::invalid_argument("mask must be rank 2, got " + mask.shape().str());
  in_ = mask.shape()[0];
  out_ = mask.shape()[1];
  Tensor w = uniform_init(mask.shape(), in_, rng);
  for (std::size_t i = 0; i < w.size(); ++i) w[i] *= mask[i];
  w_ = store.add(prefix + ".weight", std::move(w));
  b_ = store.add(prefix + ".bias", uniform_init(Shape{out_}, in_, rng));
  mask_ = constant(std::move(mask));
}

Var MaskedLinear::forward(const Var& x) const { return add(matmul(x, mul(w_, mask_)), b_); }

}  // namespace nsbi::diff
