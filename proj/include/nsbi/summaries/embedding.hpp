#pragma once

#include <string>
#include <vector>

#include "nsbi/core/rng.hpp"
#include "nsbi/core/types.hpp"
#include "nsbi/diffcore/layers.hpp"

namespace nsbi {

enum class EmbeddingKind { kNaive, kIdentity, kElman, kGru };

EmbeddingKind parse_embedding_kind(const std::string& name);
std::string embedding_kind_name(EmbeddingKind kind);

struct EmbeddingConfig {
  EmbeddingKind kind = EmbeddingKind::kNaive;
  std::size_t hidden = 32;
  std::size_t layers = 2;
  std::size_t output = 16;
};

/// Per-feature affine standardisation, fitted once and then frozen.
struct Standardizer {
  Vec mean;
  Vec sd;

  [[nodiscard]] bool fitted() const { return mean.size() > 0; }
  [[nodiscard]] Mat apply(const Mat& rows) const;
  [[nodiscard]] Vec apply(const Vec& row) const;
  [[nodiscard]] Mat invert(const Mat& rows) const;

  /// Column-wise statistics; constant columns get sd = 1.
  static Standardizer fit(const Mat& rows);
  /// Statistics pooled over every `group`-th column, for interleaved time-major layouts.
  static Standardizer fit_grouped(const Mat& rows, Eigen::Index group);
};

/// Maps a series to the input of the estimator network.
///
/// Naive and identity featurisations are fixed; Elman and GRU embeddings read the
/// flattened (time-major) series and are trained jointly with the estimator.
class Embedding {
 public:
  Embedding() = default;
  Embedding(EmbeddingConfig cfg, Eigen::Index series_dim, Eigen::Index series_length, diff::ParamStore& store,
            Rng& rng, const std::string& prefix = "embed");

  [[nodiscard]] const EmbeddingConfig& config() const { return cfg_; }
  [[nodiscard]] bool trainable() const { return cfg_.kind == EmbeddingKind::kElman || cfg_.kind == EmbeddingKind::kGru; }
  [[nodiscard]] Eigen::Index feature_dim() const;
  [[nodiscard]] Eigen::Index output_dim() const;

  /// Raw features of one series (before standardisation).
  [[nodiscard]] Vec features(const TimeSeries& x) const;
  [[nodiscard]] Mat features(const std::vector<TimeSeries>& xs) const;

  [[nodiscard]] Standardizer fit_standardizer(const Mat& features) const;

  /// [B x feature_dim] standardised features -> [B x output_dim]
  [[nodiscard]] diff::Var forward(const diff::Var& features) const;

 private:
  [[nodiscard]] diff::Var elman_forward(const diff::Var& input) const;
  [[nodiscard]] diff::Var gru_forward(const diff::Var& input) const;

  EmbeddingConfig cfg_;
  Eigen::Index series_dim_ = 0;
  Eigen::Index series_length_ = 0;
  std::vector<diff::Linear> input_maps_;
  std::vector<diff::Linear> hidden_maps_;
  diff::Linear head_;
};

}  // namespace nsbi
