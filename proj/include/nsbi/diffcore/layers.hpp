#pragma once

#include <string>

#include "nsbi/core/rng.hpp"
#include "nsbi/diffcore/adam.hpp"

namespace nsbi::diff {

/// y = x W + b with W stored as [in x out].
class Linear {
 public:
  Linear() = default;
  Linear(ParamStore& store, const std::string& prefix, std::size_t in, std::size_t out, Rng& rng,
         bool bias = true);

  [[nodiscard]] Var forward(const Var& x) const;
  [[nodiscard]] std::size_t in_features() const { return in_; }
  [[nodiscard]] std::size_t out_features() const { return out_; }
  [[nodiscard]] const Var& weight() const { return w_; }
  [[nodiscard]] const Var& bias() const { return b_; }

  /// Multiplies all weights and biases by `factor`.
  void rescale(double factor);

 protected:
  std::size_t in_ = 0;
  std::size_t out_ = 0;
  Var w_;
  Var b_;
};

/// Linear layer whose weight is multiplied elementwise by a fixed 0/1 mask.
class MaskedLinear : public Linear {
 public:
  MaskedLinear() = default;
  MaskedLinear(ParamStore& store, const std::string& prefix, Tensor mask, Rng& rng);

  [[nodiscard]] Var forward(const Var& x) const;
  [[nodiscard]] const Tensor& mask() const { return mask_.value(); }

 private:
  Var mask_;
};

/// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) initialisation.
Tensor uniform_init(Shape shape, std::size_t fan_in, Rng& rng);

}  // namespace nsbi::diff
