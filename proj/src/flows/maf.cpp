#include "nsbi/flows/maf.hpp"

#include "nsbi/diffcore/eigen_bridge.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace nsbi {

using diff::Shape;
using diff::Tensor;
using diff::Var;
using diff::from_matrix;
using diff::to_matrix;

namespace {

Tensor degree_mask(const std::vector<std::size_t>& in_deg, const std::vector<std::size_t>& out_deg, bool strict) {
  Tensor m(Shape{in_deg.size(), out_deg.size()});
  for (std::size_t i = 0; i < in_deg.size(); ++i)
    for (std::size_t j = 0; j < out_deg.size(); ++j)
      m.at(i, j) = (strict ? out_deg[j] > in_deg[i] : out_deg[j] >= in_deg[i]) ? 1.0 : 0.0;
  return m;
}

}  // namespace

MaskedAutoregressiveFlow::MaskedAutoregressiveFlow(MafConfig cfg, diff::ParamStore& store, Rng& rng,
                                                   const std::string& prefix)
    : cfg_(cfg) {
  if (cfg_.dim == 0 || cfg_.transforms == 0 || cfg_.hidden == 0 || cfg_.blocks == 0) {
    throw std::invalid_argument("flow dimensions must be positive");
  }
  const std::size_t d = cfg_.dim;
  std::vector<std::size_t> in_deg(d), hid_deg(cfg_.hidden), out_deg(2 * d);
  for (std::size_t i = 0; i < d; ++i) in_deg[i] = i + 1;
  // Degree-0 hidden units see only the context.
  for (std::size_t h = 0; h < cfg_.hidden; ++h) hid_deg[h] = h % d;
  for (std::size_t j = 0; j < 2 * d; ++j) out_deg[j] = j % d + 1;

  for (std::size_t k = 0; k < cfg_.transforms; ++k) {
    const std::string p = prefix + ".t" + std::to_string(k);
    Made made;
    made.input = diff::MaskedLinear(store, p + ".in", degree_mask(in_deg, hid_deg, false), rng);
    if (cfg_.context_dim > 0) made.context = diff::Linear(store, p + ".ctx", cfg_.context_dim, cfg_.hidden, rng, false);
    for (std::size_t b = 1; b < cfg_.blocks; ++b) {
      made.hidden.emplace_back(store, p + ".h" + std::to_string(b), degree_mask(hid_deg, hid_deg, false), rng);
    }
    made.output = diff::MaskedLinear(store, p + ".out", degree_mask(hid_deg, out_deg, true), rng);
    made.output.rescale(0.1);
    mades_.push_back(std::move(made));
  }
  std::vector<std::vector<std::size_t>> perms;
  for (std::size_t k = 0; k + 1 < cfg_.transforms; ++k) {
    std::vector<std::size_t> perm(d);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    perms.push_back(std::move(perm));
  }
  set_permutations(std::move(perms));
}

void MaskedAutoregressiveFlow::set_permutations(std::vector<std::vector<std::size_t>> perms) {
  if (perms.size() + 1 != cfg_.transforms) throw std::invalid_argument("flow needs one permutation between each pair of transforms");
  perm_mats_.clear();
  for (const auto& perm : perms) {
    if (perm.size() != cfg_.dim) throw std::invalid_argument("permutation length does not match flow dimension");
    Tensor P(Shape{cfg_.dim, cfg_.dim});
    std::vector<char> seen(cfg_.dim, 0);
    for (std::size_t j = 0; j < cfg_.dim; ++j) {
      if (perm[j] >= cfg_.dim || seen[perm[j]]) throw std::invalid_argument("invalid permutation");
      seen[perm[j]] = 1;
      P.at(perm[j], j) = 1.0;
    }
    perm_mats_.push_back(diff::constant(std::move(P)));
  }
  perms_ = std::move(perms);
}

Var MaskedAutoregressiveFlow::permute(const Var& x, std::size_t k, bool inverse) const {
  if (!inverse) return diff::matmul(x, perm_mats_[k]);
  Tensor Pt(Shape{cfg_.dim, cfg_.dim});
  for (std::size_t j = 0; j < cfg_.dim; ++j) Pt.at(j, perms_[k][j]) = 1.0;
  return diff::matmul(x, diff::constant(std::move(Pt)));
}

std::pair<Var, Var> MaskedAutoregressiveFlow::made_forward(std::size_t k, const Var& x, const Var& context) const {
  const Made& m = mades_[k];
  Var h = m.input.forward(x);
  if (cfg_.context_dim > 0) h = h + m.context.forward(context);
  h = diff::tanh(h);
  for (const auto& layer : m.hidden) h = diff::tanh(layer.forward(h));
  const Var out = m.output.forward(h);
  const std::size_t d = cfg_.dim;
  const Var shift = diff::slice(out, 1, 0, d);
  const Var raw = diff::slice(out, 1, d, d);
  const double c = cfg_.scale_clamp;
  const Var log_scale = diff::scale(diff::tanh(diff::scale(raw, 1.0 / c)), c);
  if (!log_scale.value().all_finite()) {
    throw std::runtime_error("non-finite log-scale in flow transform " + std::to_string(k));
  }
  return {shift, log_scale};
}

MaskedAutoregressiveFlow::ToBase MaskedAutoregressiveFlow::to_base(const Var& x, const Var& context) const {
  if (x.shape().rank() != 2 || x.shape()[1] != cfg_.dim) {
    throw std::invalid_argument("flow input must be [B x " + std::to_string(cfg_.dim) + "], got " + x.shape().str());
  }
  if (cfg_.context_dim > 0 && (context.shape().rank() != 2 || context.shape()[1] != cfg_.context_dim ||
                               context.shape()[0] != x.shape()[0])) {
    throw std::invalid_argument("flow context must be [B x " + std::to_string(cfg_.context_dim) + "], got " +
                                context.shape().str());
  }
  ToBase res;
  Var z = x;
  for (std::size_t k = 0; k < cfg_.transforms; ++k) {
    auto [shift, log_scale] = made_forward(k, z, context);
    z = z * diff::exp(log_scale) + shift;
    Var ld = diff::sum_axis(log_scale, 1);
    res.per_transform_logdet.push_back(ld);
    res.logdet = k == 0 ? ld : res.logdet + ld;
    if (k + 1 < cfg_.transforms) z = permute(z, k, false);
  }
  res.u = z;
  return res;
}

Var MaskedAutoregressiveFlow::log_prob(const Var& x, const Var& context) const {
  const ToBase tb = to_base(x, context);
  const double norm = -0.5 * static_cast<double>(cfg_.dim) * std::log(2.0 * std::numbers::pi);
  const Var base = diff::scale(diff::sum_axis(tb.u * tb.u, 1), -0.5);
  return base + tb.logdet + diff::constant_scalar(norm);
}

Mat MaskedAutoregressiveFlow::from_base(const Mat& u, const Mat& context) const {
  diff::NoGradGuard guard;
  const auto n = static_cast<std::size_t>(u.rows());
  Var ctx;
  if (cfg_.context_dim > 0) {
    if (context.cols() != static_cast<Eigen::Index>(cfg_.context_dim)) throw std::invalid_argument("context width mismatch");
    if (context.rows() == u.rows()) {
      ctx = diff::constant(from_matrix(context));
    } else if (context.rows() == 1) {
      ctx = diff::constant(from_matrix(context.replicate(u.rows(), 1)));
    } else {
      throw std::invalid_argument("context rows must be 1 or match the number of base points");
    }
  }
  Var y = diff::constant(from_matrix(u));
  for (std::size_t kk = cfg_.transforms; kk-- > 0;) {
    if (kk + 1 < cfg_.transforms) y = permute(y, kk, true);
    Var x = diff::constant(Tensor(Shape{n, cfg_.dim}));
    for (std::size_t pass = 0; pass < cfg_.dim; ++pass) {
      auto [shift, log_scale] = made_forward(kk, x, ctx);
      x = (y - shift) * diff::exp(diff::scale(log_scale, -1.0));
    }
    y = x;
  }
  return to_matrix(y.value());
}

Mat MaskedAutoregressiveFlow::sample(std::size_t n, const Vec& context, Rng& rng) const {
  Mat u(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(cfg_.dim));
  for (Eigen::Index i = 0; i < u.rows(); ++i)
    for (Eigen::Index j = 0; j < u.cols(); ++j) u(i, j) = standard_normal(rng);
  return from_base(u, context.transpose());
}

void MaskedAutoregressiveFlow::zero_output_layers() {
  for (auto& m : mades_) m.output.rescale(0.0);
}

}  // namespace nsbi
