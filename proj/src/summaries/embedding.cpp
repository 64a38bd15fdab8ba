#include "nsbi/summaries/embedding.hpp"

#include <cmath>
#include <stdexcept>

#include "nsbi/summaries/naive.hpp"

namespace nsbi {

using diff::Shape;
using diff::Tensor;
using diff::Var;

EmbeddingKind parse_embedding_kind(const std::string& name) {
  if (name == "naive") return EmbeddingKind::kNaive;
  if (name == "identity") return EmbeddingKind::kIdentity;
  if (name == "elman") return EmbeddingKind::kElman;
  if (name == "gru") return EmbeddingKind::kGru;
  throw std::invalid_argument("unknown embedding '" + name + "' (expected naive, identity, elman or gru)");
}

std::string embedding_kind_name(EmbeddingKind kind) {
  switch (kind) {
    case EmbeddingKind::kNaive: return "naive";
    case EmbeddingKind::kIdentity: return "identity";
    case EmbeddingKind::kElman: return "elman";
    case EmbeddingKind::kGru: return "gru";
  }
  return "naive";
}

Mat Standardizer::apply(const Mat& rows) const {
  return (rows.rowwise() - mean.transpose()).array().rowwise() / sd.transpose().array();
}

Vec Standardizer::apply(const Vec& row) const { return (row - mean).cwiseQuotient(sd); }

Mat Standardizer::invert(const Mat& rows) const {
  return (rows.array().rowwise() * sd.transpose().array()).matrix().rowwise() + mean.transpose();
}

Standardizer Standardizer::fit(const Mat& rows) { return fit_grouped(rows, rows.cols()); }

Standardizer Standardizer::fit_grouped(const Mat& rows, Eigen::Index group) {
  if (rows.rows() < 2) throw std::invalid_argument("standardizer needs at least 2 rows");
  const Eigen::Index F = rows.cols();
  Standardizer s;
  s.mean = Vec::Zero(F);
  s.sd = Vec::Ones(F);
  for (Eigen::Index g = 0; g < group; ++g) {
    double sum = 0.0, sq = 0.0;
    std::size_t n = 0;
    for (Eigen::Index c = g; c < F; c += group) {
      sum += rows.col(c).sum();
      n += static_cast<std::size_t>(rows.rows());
    }
    const double m = sum / static_cast<double>(n);
    for (Eigen::Index c = g; c < F; c += group) sq += (rows.col(c).array() - m).square().sum();
    double sd = std::sqrt(sq / static_cast<double>(n - 1));
    if (!(sd > 1e-12) || !std::isfinite(sd)) sd = 1.0;
    for (Eigen::Index c = g; c < F; c += group) {
      s.mean[c] = m;
      s.sd[c] = sd;
    }
  }
  return s;
}

Embedding::Embedding(EmbeddingConfig cfg, Eigen::Index series_dim, Eigen::Index series_length,
                     diff::ParamStore& store, Rng& rng, const std::string& prefix)
    : cfg_(cfg), series_dim_(series_dim), series_length_(series_length) {
  if (!trainable()) return;
  if (cfg_.layers == 0 || cfg_.hidden == 0) throw std::invalid_argument("recurrent embedding needs layers and hidden > 0");
  const std::size_t gates = cfg_.kind == EmbeddingKind::kGru ? 3 : 1;
  const std::size_t H = cfg_.hidden;
  for (std::size_t l = 0; l < cfg_.layers; ++l) {
    const std::size_t in = l == 0 ? static_cast<std::size_t>(series_dim_) : H;
    const std::string p = prefix + ".l" + std::to_string(l);
    input_maps_.emplace_back(store, p + ".ih", in, gates * H, rng);
    hidden_maps_.emplace_back(store, p + ".hh", H, gates * H, rng);
  }
  head_ = diff::Linear(store, prefix + ".head", H, cfg_.output, rng);
}

Eigen::Index Embedding::feature_dim() const {
  if (cfg_.kind == EmbeddingKind::kNaive) return kNaiveStatsPerDim * series_dim_;
  return series_dim_ * series_length_;
}

Eigen::Index Embedding::output_dim() const {
  return trainable() ? static_cast<Eigen::Index>(cfg_.output) : feature_dim();
}

Vec Embedding::features(const TimeSeries& x) const {
  if (x.dim() != series_dim_) {
    throw std::invalid_argument("series has " + std::to_string(x.dim()) + " columns, embedding expects " +
                                std::to_string(series_dim_));
  }
  if (cfg_.kind == EmbeddingKind::kNaive) return naive_summaries(x);
  if (x.length() != series_length_) {
    throw std::invalid_argument("series has length " + std::to_string(x.length()) + ", embedding expects " +
                                std::to_string(series_length_));
  }
  Vec out(series_dim_ * series_length_);
  for (Eigen::Index t = 0; t < series_length_; ++t)
    for (Eigen::Index j = 0; j < series_dim_; ++j) out[t * series_dim_ + j] = x.data(t, j);
  return out;
}

Mat Embedding::features(const std::vector<TimeSeries>& xs) const {
  Mat out(static_cast<Eigen::Index>(xs.size()), feature_dim());
  for (std::size_t i = 0; i < xs.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = features(xs[i]).transpose();
  return out;
}

Standardizer Embedding::fit_standardizer(const Mat& features) const {
  if (cfg_.kind == EmbeddingKind::kElman || cfg_.kind == EmbeddingKind::kGru) {
    return Standardizer::fit_grouped(features, series_dim_);
  }
  return Standardizer::fit(features);
}

Var Embedding::forward(const Var& input) const {
  switch (cfg_.kind) {
    case EmbeddingKind::kNaive:
    case EmbeddingKind::kIdentity: return input;
    case EmbeddingKind::kElman: return elman_forward(input);
    case EmbeddingKind::kGru: return gru_forward(input);
  }
  return input;
}

Var Embedding::elman_forward(const Var& input) const {
  const std::size_t B = input.shape()[0];
  const auto D = static_cast<std::size_t>(series_dim_);
  std::vector<Var> h(cfg_.layers, diff::constant(Tensor(Shape{B, cfg_.hidden})));
  for (Eigen::Index t = 0; t < series_length_; ++t) {
    Var x = diff::slice(input, 1, static_cast<std::size_t>(t) * D, D);
    for (std::size_t l = 0; l < cfg_.layers; ++l) {
      h[l] = diff::tanh(input_maps_[l].forward(x) + hidden_maps_[l].forward(h[l]));
      x = h[l];
    }
  }
  return head_.forward(h.back());
}

Var Embedding::gru_forward(const Var& input) const {
  const std::size_t B = input.shape()[0];
  const std::size_t H = cfg_.hidden;
  const auto D = static_cast<std::size_t>(series_dim_);
  std::vector<Var> h(cfg_.layers, diff::constant(Tensor(Shape{B, H})));
  for (Eigen::Index t = 0; t < series_length_; ++t) {
    Var x = diff::slice(input, 1, static_cast<std::size_t>(t) * D, D);
    for (std::size_t l = 0; l < cfg_.layers; ++l) {
      const Var gi = input_maps_[l].forward(x);
      const Var gh = hidden_maps_[l].forward(h[l]);
      const Var r = diff::sigmoid(diff::slice(gi, 1, 0, H) + diff::slice(gh, 1, 0, H));
      const Var z = diff::sigmoid(diff::slice(gi, 1, H, H) + diff::slice(gh, 1, H, H));
      const Var n = diff::tanh(diff::slice(gi, 1, 2 * H, H) + r * diff::slice(gh, 1, 2 * H, H));
      // h' = (1 - z) n + z h = n + z (h - n)
      h[l] = n + z * (h[l] - n);
      x = h[l];
    }
  }
  return head_.forward(h.back());
}

}  // namespace nsbi
