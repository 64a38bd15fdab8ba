#include "nsbi/summaries/conditioning.hpp"

#include "nsbi/diffcore/eigen_bridge.hpp"

namespace nsbi {

void Conditioning::freeze(const Mat& thetas, const Mat& features) {
  if (theta_std.fitted()) return;
  theta_std = Standardizer::fit(thetas);
  feature_std = embedding.fit_standardizer(features);
}

diff::Var Conditioning::context(const Mat& raw_features) const {
  return embedding.forward(diff::constant(diff::from_matrix(feature_std.apply(raw_features))));
}

void Conditioning::save(Blob& blob) const {
  blob.arrays.emplace_back("std/theta_mean", diff::from_vector(theta_std.mean));
  blob.arrays.emplace_back("std/theta_sd", diff::from_vector(theta_std.sd));
  blob.arrays.emplace_back("std/feature_mean", diff::from_vector(feature_std.mean));
  blob.arrays.emplace_back("std/feature_sd", diff::from_vector(feature_std.sd));
}

void Conditioning::load(const Blob& blob) {
  theta_std.mean = diff::to_vector(blob.array("std/theta_mean"));
  theta_std.sd = diff::to_vector(blob.array("std/theta_sd"));
  feature_std.mean = diff::to_vector(blob.array("std/feature_mean"));
  feature_std.sd = diff::to_vector(blob.array("std/feature_sd"));
}

nlohmann::json embedding_config_json(const EmbeddingConfig& cfg) {
  return {{"kind", embedding_kind_name(cfg.kind)}, {"hidden", cfg.hidden}, {"layers", cfg.layers}, {"output", cfg.output}};
}

EmbeddingConfig embedding_config_from_json(const nlohmann::json& j) {
  EmbeddingConfig cfg;
  cfg.kind = parse_embedding_kind(j.at("kind").get<std::string>());
  cfg.hidden = j.at("hidden").get<std::size_t>();
  cfg.layers = j.at("layers").get<std::size_t>();
  cfg.output = j.at("output").get<std::size_t>();
  return cfg;
}

}  // namespace nsbi
