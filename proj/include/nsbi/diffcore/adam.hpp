#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "nsbi/diffcore/graph.hpp"

namespace nsbi::diff {

struct AdamConfig {
  double lr = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Owns named trainable parameters together with their Adam moments.
class ParamStore {
 public:
  Var add(const std::string& name, Tensor init);

  [[nodiscard]] const Var& get(const std::string& name) const;
  [[nodiscard]] bool contains(const std::string& name) const;
  [[nodiscard]] const std::vector<Var>& params() const { return params_; }
  [[nodiscard]] const std::vector<std::string>& names() const { return names_; }
  [[nodiscard]] std::size_t parameter_count() const;
  [[nodiscard]] std::size_t step_count() const { return step_; }

  void zero_grad();

  /// Refuses the whole step if any gradient is non-finite.
  void adam_step(const AdamConfig& cfg);

  [[nodiscard]] std::vector<Tensor> snapshot() const;
  void restore(const std::vector<Tensor>& values);

  /// Replaces a parameter value in place, keeping its shape.
  void set_value(const std::string& name, const Tensor& value);

 private:
  std::size_t index_of(const std::string& name) const;

  std::vector<std::string> names_;
  std::vector<Var> params_;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
  std::size_t step_ = 0;
};

}  // namespace nsbi::diff
