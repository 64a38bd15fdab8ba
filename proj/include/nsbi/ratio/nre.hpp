#pragma once

#include <memory>

#include "nsbi/core/prior.hpp"
#include "nsbi/core/simulator.hpp"
#include "nsbi/core/trainset.hpp"
#include "nsbi/diffcore/trainer.hpp"
#include "nsbi/flows/npe.hpp"
#include "nsbi/sampling/mh.hpp"
#include "nsbi/summaries/conditioning.hpp"

namespace nsbi {

struct NreConfig {
  EmbeddingConfig embedding;
  std::size_t hidden = 50;
  std::size_t blocks = 2;
  /// Contrasting parameters per item (K).
  std::size_t contrasts = 9;
  diff::TrainConfig train;
};

/// Residual classifier f(x, theta) whose logit estimates log p(theta | x) / p(theta).
class RatioEstimator {
 public:
  RatioEstimator(NreConfig cfg, std::shared_ptr<const Prior> prior, Eigen::Index series_dim, Eigen::Index series_length,
                 std::uint64_t seed);

  [[nodiscard]] const NreConfig& config() const { return cfg_; }
  [[nodiscard]] const Prior& prior() const { return *prior_; }
  [[nodiscard]] const Conditioning& conditioning() const { return cond_; }
  [[nodiscard]] diff::ParamStore& store() { return store_; }

  [[nodiscard]] Vec features(const TimeSeries& x) const { return cond_.embedding.features(x); }
  [[nodiscard]] Mat features(const std::vector<TimeSeries>& xs) const { return cond_.embedding.features(xs); }

  /// Freezes standardisation from `thetas`/`features` if not yet done.
  void freeze(const Mat& thetas, const Mat& features) { cond_.freeze(thetas, features); }

  /// Network output for standardised parameters and an embedded context, shape [N].
  [[nodiscard]] diff::Var logits(const diff::Var& z_theta, const diff::Var& context) const;

  /// Multi-class loss over K contrasts drawn from the other batch items; requires K < batch size.
  [[nodiscard]] diff::Var nre_loss(const TrainSet& data, const std::vector<std::size_t>& items, std::size_t K,
                                   Rng& rng) const;

  diff::TrainReport train(const TrainSet& data, Rng& rng);

  /// f(x, theta) for each row of `thetas`.
  [[nodiscard]] Vec log_ratio(const Mat& thetas, const Vec& raw_features) const;

  /// log p(theta) + f(x, theta); -inf outside the prior support.
  [[nodiscard]] double posterior_logpdf_unnorm(const Vec& theta, const Vec& raw_features) const;

  /// Fast evaluator of posterior_logpdf_unnorm for a fixed observation.
  [[nodiscard]] LogTarget posterior_target(const Vec& raw_features) const;

  [[nodiscard]] MHResult sample_mh(const Vec& raw_features, const MHConfig& cfg, const Vec& theta0, Rng& rng) const;
  /// Sampling-importance-resampling from `n_proposals` prior draws.
  [[nodiscard]] Mat sample_sir(std::size_t n_out, std::size_t n_proposals, const Vec& raw_features, Rng& rng) const;

  /// Sets the final layer to zero so f = 0 everywhere.
  void zero_output_layer();

  [[nodiscard]] Blob to_blob() const;
  static std::unique_ptr<RatioEstimator> from_blob(const Blob& blob, std::shared_ptr<const Prior> prior);

 private:
  NreConfig cfg_;
  std::shared_ptr<const Prior> prior_;
  Eigen::Index series_dim_;
  Eigen::Index series_length_;
  diff::ParamStore store_;
  Conditioning cond_;
  diff::Linear input_;
  std::vector<std::pair<diff::Linear, diff::Linear>> blocks_;
  diff::Linear output_;
};

/// Round 0 draws from the prior; later rounds draw by MH on log p(theta) + f(observation, theta).
SequentialResult snre_rounds(RatioEstimator& nre, const Simulator& sim, const TimeSeries& observation,
                             const RoundSettings& rounds, const MHConfig& proposal_mh, std::uint64_t seed);

}  // namespace nsbi
