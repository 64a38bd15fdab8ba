#pragma once

// Define-by-run reverse-mode differentiation over dense Tensors.
//
// Every operation allocates a Node holding its value and, when any input
// requires a gradient, a closure that scatters the output gradient into the
// inputs. The graph lives exactly as long as the Vars that reference it.

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "nsbi/diffcore/tensor.hpp"

namespace nsbi::diff {

enum class OpKind {
  kLeaf,
  kAdd,
  kSub,
  kMul,
  kDiv,
  kMatMul,
  kTanh,
  kRelu,
  kExp,
  kLog,
  kSigmoid,
  kLogSumExp,
  kConcat,
  kSlice,
  kSum,
  kMean,
  kSumAxis,
  kTakeRows,
  kReshape,
  kScale,
};

const char* op_name(OpKind op);

struct Node {
  Tensor value;
  Tensor grad;  // allocated lazily, same shape as value
  bool requires_grad = false;
  OpKind op = OpKind::kLeaf;
  std::string name;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward_fn;
  std::uint64_t visit_stamp = 0;

  Tensor& ensure_grad();
};

class Var {
 public:
  Var() = default;
  explicit Var(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  [[nodiscard]] const Tensor& value() const { return node_->value; }
  [[nodiscard]] Tensor& mutable_value() { return node_->value; }
  [[nodiscard]] const Shape& shape() const { return node_->value.shape(); }
  [[nodiscard]] bool requires_grad() const { return node_->requires_grad; }
  [[nodiscard]] bool has_grad() const { return node_->grad.size() == node_->value.size() && node_->grad.shape() == node_->value.shape(); }
  [[nodiscard]] const Tensor& grad() const;
  [[nodiscard]] double item() const { return node_->value.item(); }
  [[nodiscard]] const std::string& name() const { return node_->name; }
  [[nodiscard]] Node* node() const { return node_.get(); }
  [[nodiscard]] const std::shared_ptr<Node>& ptr() const { return node_; }
  [[nodiscard]] explicit operator bool() const { return static_cast<bool>(node_); }

  void zero_grad();

 private:
  std::shared_ptr<Node> node_;
};

/// Disables graph recording on this thread for the guard's lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

[[nodiscard]] bool grad_enabled();

Var constant(Tensor value);
Var constant_scalar(double v);
Var parameter(Tensor value, std::string name);

// Elementwise binary ops broadcast numpy-style over right-aligned dimensions.
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var div(const Var& a, const Var& b);
Var scale(const Var& a, double c);

/// [m x k] . [k x n] -> [m x n]
Var matmul(const Var& a, const Var& b);

Var tanh(const Var& a);
Var relu(const Var& a);
Var exp(const Var& a);
Var log(const Var& a);
Var sigmoid(const Var& a);

/// Reduces the last axis; rank-1 input yields a scalar.
Var logsumexp(const Var& a, bool keepdim = false);

Var concat(const std::vector<Var>& parts, std::size_t axis);
Var slice(const Var& a, std::size_t axis, std::size_t start, std::size_t length);

Var sum(const Var& a);
Var mean(const Var& a);
Var sum_axis(const Var& a, std::size_t axis, bool keepdim = false);

/// Gathers rows (axis 0) of a rank-1 or rank-2 tensor; indices may repeat.
Var take_rows(const Var& a, const std::vector<std::size_t>& rows);
Var reshape(const Var& a, Shape shape);

inline Var operator+(const Var& a, const Var& b) { return add(a, b); }
inline Var operator-(const Var& a, const Var& b) { return sub(a, b); }
inline Var operator*(const Var& a, const Var& b) { return mul(a, b); }
inline Var operator/(const Var& a, const Var& b) { return div(a, b); }

/// Accumulates d(root)/d(node) into every reachable node that requires a gradient.
void backward(const Var& root);

}  // namespace nsbi::diff
