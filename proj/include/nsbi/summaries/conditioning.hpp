#pragma once

#include "nsbi/io/blob.hpp"
#include "nsbi/summaries/embedding.hpp"

namespace nsbi {

/// Embedding network plus the frozen standardisation of parameters and features
/// shared by the neural estimators.
struct Conditioning {
  Embedding embedding;
  Standardizer theta_std;
  Standardizer feature_std;

  /// Fits both standardisers on the first call; later calls keep the frozen statistics.
  void freeze(const Mat& thetas, const Mat& features);

  /// Embedded standardised features, [rows x embedding.output_dim()].
  [[nodiscard]] diff::Var context(const Mat& raw_features) const;

  void save(Blob& blob) const;
  void load(const Blob& blob);
};

nlohmann::json embedding_config_json(const EmbeddingConfig& cfg);
EmbeddingConfig embedding_config_from_json(const nlohmann::json& j);

}  // namespace nsbi
