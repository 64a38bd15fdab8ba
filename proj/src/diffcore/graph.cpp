#include "nsbi/diffcore/graph.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>

namespace nsbi::diff {

namespace {

// glibc's tanh goes through expm1, which dominates training time; exp is several times faster.
// The odd series covers |x| < 1e-3 where 1 - 2 / (e^2x + 1) loses relative precision.
double fast_tanh(double x) {
  if (std::abs(x) < 1e-3) {
    const double x2 = x * x;
    return x * (1.0 - x2 * (1.0 / 3.0 - x2 * (2.0 / 15.0)));
  }
  return 1.0 - 2.0 / (std::exp(2.0 * x) + 1.0);
}

thread_local bool g_grad_enabled = true;
thread_local std::uint64_t g_visit_counter = 0;

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMajor>;
using MutMap = Eigen::Map<RowMajor>;

std::string mismatch(const char* op, const Shape& a, const Shape& b) {
  return std::string(op) + ": shape mismatch " + a.str() + " vs " + b.str();
}

Var make_result(Tensor value, OpKind op, std::vector<std::shared_ptr<Node>> parents,
                std::function<void(Node&)> fn) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  node->op = op;
  const bool any = std::any_of(parents.begin(), parents.end(),
                               [](const auto& p) { return p->requires_grad; });
  if (g_grad_enabled && any) {
    node->requires_grad = true;
    node->parents = std::move(parents);
    node->backward_fn = std::move(fn);
  }
  return Var(std::move(node));
}

// Row-major strides over rank-3 padded dims, zeroed on broadcast axes.
struct BroadcastPlan {
  Shape out;
  std::array<std::size_t, kMaxRank> dims{};
  std::array<std::size_t, kMaxRank> stride_a{};
  std::array<std::size_t, kMaxRank> stride_b{};
  bool same = false;
};

std::array<std::size_t, kMaxRank> strides_for(const std::array<std::size_t, kMaxRank>& src,
                                               const std::array<std::size_t, kMaxRank>& out) {
  std::array<std::size_t, kMaxRank> s{src[1] * src[2], src[2], 1};
  for (std::size_t k = 0; k < kMaxRank; ++k)
    if (src[k] == 1 && out[k] != 1) s[k] = 0;
  return s;
}

BroadcastPlan plan_broadcast(const char* op, const Shape& a, const Shape& b) {
  BroadcastPlan p;
  if (a == b) {
    p.out = a;
    p.same = true;
    return p;
  }
  const auto pa = a.padded();
  const auto pb = b.padded();
  const std::size_t rank = std::max(a.rank(), b.rank());
  for (std::size_t k = 0; k < kMaxRank; ++k) {
    if (pa[k] == pb[k] || pb[k] == 1) {
      p.dims[k] = pa[k];
    } else if (pa[k] == 1) {
      p.dims[k] = pb[k];
    } else {
      throw std::invalid_argument(mismatch(op, a, b));
    }
  }
  std::vector<std::size_t> out_dims(p.dims.end() - static_cast<std::ptrdiff_t>(rank), p.dims.end());
  p.out = Shape(std::span<const std::size_t>(out_dims));
  p.stride_a = strides_for(pa, p.dims);
  p.stride_b = strides_for(pb, p.dims);
  return p;
}

template <class F>
void for_each_broadcast(const BroadcastPlan& p, std::size_t n, F&& f) {
  if (p.same) {
    for (std::size_t i = 0; i < n; ++i) f(i, i, i);
    return;
  }
  std::size_t o = 0;
  for (std::size_t i0 = 0; i0 < p.dims[0]; ++i0) {
    for (std::size_t i1 = 0; i1 < p.dims[1]; ++i1) {
      const std::size_t base_a = i0 * p.stride_a[0] + i1 * p.stride_a[1];
      const std::size_t base_b = i0 * p.stride_b[0] + i1 * p.stride_b[1];
      for (std::size_t i2 = 0; i2 < p.dims[2]; ++i2, ++o) {
        f(o, base_a + i2 * p.stride_a[2], base_b + i2 * p.stride_b[2]);
      }
    }
  }
}

// fa(a, b) and fb(a, b) give the local partial derivatives.
template <class Fwd, class DA, class DB>
Var binary(const char* name, OpKind op, const Var& a, const Var& b, Fwd fwd, DA da, DB db) {
  const BroadcastPlan plan = plan_broadcast(name, a.shape(), b.shape());
  Tensor out(plan.out);
  const auto& va = a.value();
  const auto& vb = b.value();
  for_each_broadcast(plan, out.size(),
                     [&](std::size_t o, std::size_t ia, std::size_t ib) { out[o] = fwd(va[ia], vb[ib]); });
  return make_result(std::move(out), op, {a.ptr(), b.ptr()}, [plan, da, db](Node& self) {
    Node& pa = *self.parents[0];
    Node& pb = *self.parents[1];
    const Tensor& g = self.grad;
    const Tensor& va = pa.value;
    const Tensor& vb = pb.value;
    if (pa.requires_grad) {
      Tensor& ga = pa.ensure_grad();
      for_each_broadcast(plan, g.size(), [&](std::size_t o, std::size_t ia, std::size_t ib) {
        ga[ia] += g[o] * da(va[ia], vb[ib]);
      });
    }
    if (pb.requires_grad) {
      Tensor& gb = pb.ensure_grad();
      for_each_broadcast(plan, g.size(), [&](std::size_t o, std::size_t ia, std::size_t ib) {
        gb[ib] += g[o] * db(va[ia], vb[ib]);
      });
    }
  });
}

// dy(x, y) is the local derivative given input x and output y.
template <class Fwd, class D>
Var unary(OpKind op, const Var& a, Fwd fwd, D dy) {
  const Tensor& va = a.value();
  Tensor out(va.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = fwd(va[i]);
  return make_result(std::move(out), op, {a.ptr()}, [dy](Node& self) {
    Node& p = *self.parents[0];
    Tensor& gp = p.ensure_grad();
    const Tensor& g = self.grad;
    for (std::size_t i = 0; i < g.size(); ++i) gp[i] += g[i] * dy(p.value[i], self.value[i]);
  });
}

// View of a tensor as (outer, axis, inner) around one axis.
struct AxisView {
  std::size_t outer = 1;
  std::size_t len = 1;
  std::size_t inner = 1;
};

AxisView axis_view(const Shape& s, std::size_t axis) {
  AxisView v;
  for (std::size_t k = 0; k < axis; ++k) v.outer *= s[k];
  v.len = s[axis];
  for (std::size_t k = axis + 1; k < s.rank(); ++k) v.inner *= s[k];
  return v;
}

Shape with_axis(const Shape& s, std::size_t axis, std::size_t len) {
  std::vector<std::size_t> dims;
  for (std::size_t k = 0; k < s.rank(); ++k) dims.push_back(k == axis ? len : s[k]);
  return Shape(std::span<const std::size_t>(dims));
}

Shape without_axis(const Shape& s, std::size_t axis) {
  std::vector<std::size_t> dims;
  for (std::size_t k = 0; k < s.rank(); ++k)
    if (k != axis) dims.push_back(s[k]);
  return Shape(std::span<const std::size_t>(dims));
}

}  // namespace

const char* op_name(OpKind op) {
  switch (op) {
    case OpKind::kLeaf: return "leaf";
    case OpKind::kAdd: return "add";
    case OpKind::kSub: return "sub";
    case OpKind::kMul: return "mul";
    case OpKind::kDiv: return "div";
    case OpKind::kMatMul: return "matmul";
    case OpKind::kTanh: return "tanh";
    case OpKind::kRelu: return "relu";
    case OpKind::kExp: return "exp";
    case OpKind::kLog: return "log";
    case OpKind::kSigmoid: return "sigmoid";
    case OpKind::kLogSumExp: return "logsumexp";
    case OpKind::kConcat: return "concat";
    case OpKind::kSlice: return "slice";
    case OpKind::kSum: return "sum";
    case OpKind::kMean: return "mean";
    case OpKind::kSumAxis: return "sum_axis";
    case OpKind::kTakeRows: return "take_rows";
    case OpKind::kReshape: return "reshape";
    case OpKind::kScale: return "scale";
  }
  return "unknown";
}

Tensor& Node::ensure_grad() {
  if (!(grad.shape() == value.shape()) || grad.size() != value.size()) grad = Tensor(value.shape());
  return grad;
}

const Tensor& Var::grad() const {
  if (!has_grad()) node_->ensure_grad();
  return node_->grad;
}

void Var::zero_grad() {
  if (has_grad()) node_->grad.fill(0.0);
}

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

bool grad_enabled() { return g_grad_enabled; }

Var constant(Tensor value) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  return Var(std::move(node));
}

Var constant_scalar(double v) { return constant(Tensor::scalar(v)); }

Var parameter(Tensor value, std::string name) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  node->requires_grad = true;
  node->name = std::move(name);
  return Var(std::move(node));
}

Var add(const Var& a, const Var& b) {
  return binary(
      "add", OpKind::kAdd, a, b, [](double x, double y) { return x + y; },
      [](double, double) { return 1.0; }, [](double, double) { return 1.0; });
}

Var sub(const Var& a, const Var& b) {
  return binary(
      "sub", OpKind::kSub, a, b, [](double x, double y) { return x - y; },
      [](double, double) { return 1.0; }, [](double, double) { return -1.0; });
}

Var mul(const Var& a, const Var& b) {
  return binary(
      "mul", OpKind::kMul, a, b, [](double x, double y) { return x * y; },
      [](double, double y) { return y; }, [](double x, double) { return x; });
}

Var div(const Var& a, const Var& b) {
  return binary(
      "div", OpKind::kDiv, a, b, [](double x, double y) { return x / y; },
      [](double, double y) { return 1.0 / y; }, [](double x, double y) { return -x / (y * y); });
}

Var scale(const Var& a, double c) {
  return unary(
      OpKind::kScale, a, [c](double x) { return c * x; }, [c](double, double) { return c; });
}

Var matmul(const Var& a, const Var& b) {
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  if (sa.rank() != 2 || sb.rank() != 2 || sa[1] != sb[0]) {
    throw std::invalid_argument(mismatch("matmul", sa, sb));
  }
  const std::size_t m = sa[0], k = sa[1], n = sb[1];
  Tensor out(Shape{m, n});
  MutMap(out.data().data(), m, n).noalias() =
      ConstMap(a.value().data().data(), m, k) * ConstMap(b.value().data().data(), k, n);
  return make_result(std::move(out), OpKind::kMatMul, {a.ptr(), b.ptr()}, [m, k, n](Node& self) {
    Node& pa = *self.parents[0];
    Node& pb = *self.parents[1];
    ConstMap g(self.grad.data().data(), m, n);
    if (pa.requires_grad) {
      MutMap(pa.ensure_grad().data().data(), m, k).noalias() +=
          g * ConstMap(pb.value.data().data(), k, n).transpose();
    }
    if (pb.requires_grad) {
      MutMap(pb.ensure_grad().data().data(), k, n).noalias() +=
          ConstMap(pa.value.data().data(), m, k).transpose() * g;
    }
  });
}

Var tanh(const Var& a) {
  return unary(
      OpKind::kTanh, a, [](double x) { return fast_tanh(x); },
      [](double, double y) { return 1.0 - y * y; });
}

Var relu(const Var& a) {
  return unary(
      OpKind::kRelu, a, [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var exp(const Var& a) {
  return unary(
      OpKind::kExp, a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Var log(const Var& a) {
  return unary(
      OpKind::kLog, a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Var sigmoid(const Var& a) {
  return unary(
      OpKind::kSigmoid, a,
      [](double x) {
        if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Var logsumexp(const Var& a, bool keepdim) {
  const Shape& s = a.shape();
  if (s.rank() == 0) throw std::invalid_argument("logsumexp: input must have rank >= 1");
  const std::size_t axis = s.rank() - 1;
  const AxisView v = axis_view(s, axis);
  const Shape out_shape = keepdim ? with_axis(s, axis, 1) : without_axis(s, axis);
  Tensor out(out_shape);
  const Tensor& x = a.value();
  for (std::size_t o = 0; o < v.outer; ++o) {
    const double* row = x.data().data() + o * v.len;
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < v.len; ++j) m = std::max(m, row[j]);
    if (!std::isfinite(m)) {
      out[o] = m;
      continue;
    }
    double acc = 0.0;
    for (std::size_t j = 0; j < v.len; ++j) acc += std::exp(row[j] - m);
    out[o] = m + std::log(acc);
  }
  return make_result(std::move(out), OpKind::kLogSumExp, {a.ptr()}, [v](Node& self) {
    Node& p = *self.parents[0];
    Tensor& gp = p.ensure_grad();
    for (std::size_t o = 0; o < v.outer; ++o) {
      const double lse = self.value[o];
      if (!std::isfinite(lse)) continue;
      const double g = self.grad[o];
      for (std::size_t j = 0; j < v.len; ++j) {
        const std::size_t i = o * v.len + j;
        gp[i] += g * std::exp(p.value[i] - lse);
      }
    }
  });
}

Var concat(const std::vector<Var>& parts, std::size_t axis) {
  if (parts.empty()) throw std::invalid_argument("concat: no inputs");
  const Shape& s0 = parts[0].shape();
  if (axis >= s0.rank()) throw std::invalid_argument("concat: axis out of range for " + s0.str());
  std::size_t total = 0;
  std::vector<AxisView> views;
  std::vector<std::shared_ptr<Node>> parents;
  for (const Var& p : parts) {
    const Shape& s = p.shape();
    bool ok = s.rank() == s0.rank();
    for (std::size_t k = 0; ok && k < s.rank(); ++k)
      if (k != axis && s[k] != s0[k]) ok = false;
    if (!ok) throw std::invalid_argument(mismatch("concat", s0, s));
    views.push_back(axis_view(s, axis));
    total += s[axis];
    parents.push_back(p.ptr());
  }
  const Shape out_shape = with_axis(s0, axis, total);
  const AxisView ov = axis_view(out_shape, axis);
  Tensor out(out_shape);
  std::size_t offset = 0;
  for (std::size_t pi = 0; pi < parts.size(); ++pi) {
    const AxisView& v = views[pi];
    const Tensor& x = parts[pi].value();
    for (std::size_t o = 0; o < v.outer; ++o)
      std::copy_n(x.data().data() + o * v.len * v.inner, v.len * v.inner,
                  out.data().data() + (o * ov.len + offset) * ov.inner);
    offset += v.len;
  }
  return make_result(std::move(out), OpKind::kConcat, std::move(parents), [views, ov](Node& self) {
    std::size_t off = 0;
    for (std::size_t pi = 0; pi < self.parents.size(); ++pi) {
      Node& p = *self.parents[pi];
      const AxisView& v = views[pi];
      if (p.requires_grad) {
        Tensor& gp = p.ensure_grad();
        for (std::size_t o = 0; o < v.outer; ++o) {
          const double* src = self.grad.data().data() + (o * ov.len + off) * ov.inner;
          double* dst = gp.data().data() + o * v.len * v.inner;
          for (std::size_t i = 0; i < v.len * v.inner; ++i) dst[i] += src[i];
        }
      }
      off += v.len;
    }
  });
}

Var slice(const Var& a, std::size_t axis, std::size_t start, std::size_t length) {
  const Shape& s = a.shape();
  if (axis >= s.rank() || start + length > s[axis]) {
    throw std::invalid_argument("slice: range [" + std::to_string(start) + ", " +
                                std::to_string(start + length) + ") on axis " +
                                std::to_string(axis) + " out of bounds for " + s.str());
  }
  const AxisView v = axis_view(s, axis);
  Tensor out(with_axis(s, axis, length));
  const Tensor& x = a.value();
  for (std::size_t o = 0; o < v.outer; ++o)
    std::copy_n(x.data().data() + (o * v.len + start) * v.inner, length * v.inner,
                out.data().data() + o * length * v.inner);
  return make_result(std::move(out), OpKind::kSlice, {a.ptr()}, [v, start, length](Node& self) {
    Tensor& gp = self.parents[0]->ensure_grad();
    for (std::size_t o = 0; o < v.outer; ++o) {
      const double* src = self.grad.data().data() + o * length * v.inner;
      double* dst = gp.data().data() + (o * v.len + start) * v.inner;
      for (std::size_t i = 0; i < length * v.inner; ++i) dst[i] += src[i];
    }
  });
}

Var sum(const Var& a) {
  double acc = 0.0;
  for (double x : a.value().data()) acc += x;
  return make_result(Tensor::scalar(acc), OpKind::kSum, {a.ptr()}, [](Node& self) {
    Tensor& gp = self.parents[0]->ensure_grad();
    const double g = self.grad[0];
    for (std::size_t i = 0; i < gp.size(); ++i) gp[i] += g;
  });
}

Var mean(const Var& a) {
  const auto n = static_cast<double>(a.value().size());
  double acc = 0.0;
  for (double x : a.value().data()) acc += x;
  return make_result(Tensor::scalar(acc / n), OpKind::kMean, {a.ptr()}, [n](Node& self) {
    Tensor& gp = self.parents[0]->ensure_grad();
    const double g = self.grad[0] / n;
    for (std::size_t i = 0; i < gp.size(); ++i) gp[i] += g;
  });
}

Var sum_axis(const Var& a, std::size_t axis, bool keepdim) {
  const Shape& s = a.shape();
  if (axis >= s.rank()) throw std::invalid_argument("sum_axis: axis out of range for " + s.str());
  const AxisView v = axis_view(s, axis);
  Tensor out(keepdim ? with_axis(s, axis, 1) : without_axis(s, axis));
  const Tensor& x = a.value();
  for (std::size_t o = 0; o < v.outer; ++o)
    for (std::size_t j = 0; j < v.len; ++j)
      for (std::size_t i = 0; i < v.inner; ++i) out[o * v.inner + i] += x[(o * v.len + j) * v.inner + i];
  return make_result(std::move(out), OpKind::kSumAxis, {a.ptr()}, [v](Node& self) {
    Tensor& gp = self.parents[0]->ensure_grad();
    for (std::size_t o = 0; o < v.outer; ++o)
      for (std::size_t j = 0; j < v.len; ++j)
        for (std::size_t i = 0; i < v.inner; ++i) gp[(o * v.len + j) * v.inner + i] += self.grad[o * v.inner + i];
  });
}

Var take_rows(const Var& a, const std::vector<std::size_t>& rows) {
  const Shape& s = a.shape();
  if (s.rank() != 1 && s.rank() != 2) throw std::invalid_argument("take_rows: expected rank 1 or 2, got " + s.str());
  const std::size_t width = s.rank() == 2 ? s[1] : 1;
  for (std::size_t r : rows)
    if (r >= s[0]) throw std::invalid_argument("take_rows: row " + std::to_string(r) + " out of range for " + s.str());
  Tensor out(s.rank() == 2 ? Shape{rows.size(), width} : Shape{rows.size()});
  const Tensor& x = a.value();
  for (std::size_t i = 0; i < rows.size(); ++i)
    std::copy_n(x.data().data() + rows[i] * width, width, out.data().data() + i * width);
  return make_result(std::move(out), OpKind::kTakeRows, {a.ptr()}, [rows, width](Node& self) {
    Tensor& gp = self.parents[0]->ensure_grad();
    for (std::size_t i = 0; i < rows.size(); ++i)
      for (std::size_t j = 0; j < width; ++j) gp[rows[i] * width + j] += self.grad[i * width + j];
  });
}

Var reshape(const Var& a, Shape shape) {
  if (shape.size() != a.value().size()) {
    throw std::invalid_argument(mismatch("reshape", a.shape(), shape));
  }
  Tensor out(shape, a.value().storage());
  return make_result(std::move(out), OpKind::kReshape, {a.ptr()}, [](Node& self) {
    Tensor& gp = self.parents[0]->ensure_grad();
    for (std::size_t i = 0; i < gp.size(); ++i) gp[i] += self.grad[i];
  });
}

void backward(const Var& root) {
  if (root.value().size() != 1) {
    throw std::invalid_argument("backward: root must be a scalar, got shape " + root.shape().str());
  }
  if (!root.requires_grad()) return;

  const std::uint64_t stamp = ++g_visit_counter;
  std::vector<Node*> order;
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(root.node(), 0);
  root.node()->visit_stamp = stamp;
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* p = node->parents[next++].get();
      if (p->requires_grad && p->visit_stamp != stamp) {
        p->visit_stamp = stamp;
        stack.emplace_back(p, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  // Interior gradients are recomputed from scratch; leaves accumulate.
  for (Node* n : order)
    if (n->backward_fn) n->ensure_grad().fill(0.0);
  root.node()->ensure_grad()[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward_fn) n->backward_fn(*n);
  }
}

}  // namespace nsbi::diff
