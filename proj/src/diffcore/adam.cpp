#include "nsbi/diffcore/adam.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace nsbi::diff {

Var ParamStore::add(const std::string& name, Tensor init) {
  if (contains(name)) throw std::invalid_argument("duplicate parameter name: " + name);
  const Shape shape = init.shape();
  Var p = parameter(std::move(init), name);
  names_.push_back(name);
  params_.push_back(p);
  m_.emplace_back(shape);
  v_.emplace_back(shape);
  return p;
}

std::size_t ParamStore::index_of(const std::string& name) const {
  auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) throw std::out_of_range("unknown parameter: " + name);
  return static_cast<std::size_t>(it - names_.begin());
}

const Var& ParamStore::get(const std::string& name) const { return params_[index_of(name)]; }

bool ParamStore::contains(const std::string& name) const {
  return std::find(names_.begin(), names_.end(), name) != names_.end();
}

std::size_t ParamStore::parameter_count() const {
  std::size_t n = 0;
  for (const Var& p : params_) n += p.value().size();
  return n;
}

void ParamStore::zero_grad() {
  for (Var& p : params_) p.zero_grad();
}

void ParamStore::adam_step(const AdamConfig& cfg) {
  for (std::size_t k = 0; k < params_.size(); ++k) {
    if (params_[k].has_grad() && !params_[k].grad().all_finite()) {
      throw std::runtime_error("non-finite gradient in parameter " + names_[k]);
    }
  }
  ++step_;
  const double t = static_cast<double>(step_);
  const double c1 = 1.0 - std::pow(cfg.beta1, t);
  const double c2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t k = 0; k < params_.size(); ++k) {
    Var& p = params_[k];
    if (!p.has_grad()) continue;
    const Tensor& g = p.grad();
    Tensor& w = p.mutable_value();
    Tensor& m = m_[k];
    Tensor& v = v_[k];
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
      w[i] -= cfg.lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + cfg.eps);
    }
  }
}

std::vector<Tensor> ParamStore::snapshot() const {
  std::vector<Tensor> out;
  out.reserve(params_.size());
  for (const Var& p : params_) out.push_back(p.value());
  return out;
}

void ParamStore::restore(const std::vector<Tensor>& values) {
  if (values.size() != params_.size()) {
    throw std::invalid_argument("restore: expected " + std::to_string(params_.size()) +
                                " arrays, got " + std::to_string(values.size()));
  }
  for (std::size_t k = 0; k < params_.size(); ++k) set_value(names_[k], values[k]);
}

void ParamStore::set_value(const std::string& name, const Tensor& value) {
  Var& p = params_[index_of(name)];
  if (!(p.shape() == value.shape())) {
    throw std::invalid_argument("parameter " + name + ": shape mismatch " + p.shape().str() +
                                " vs " + value.shape().str());
  }
  p.mutable_value() = value;
}

}  // namespace nsbi::diff
