#pragma once

#include <memory>

#include "nsbi/core/prior.hpp"
#include "nsbi/core/simulator.hpp"
#include "nsbi/core/trainset.hpp"
#include "nsbi/diffcore/trainer.hpp"
#include "nsbi/flows/maf.hpp"
#include "nsbi/summaries/conditioning.hpp"

namespace nsbi {

struct NpeConfig {
  EmbeddingConfig embedding;
  std::size_t transforms = 5;
  std::size_t hidden = 50;
  std::size_t blocks = 2;
  double scale_clamp = 7.0;
  /// Contrasting parameters per item in the sequential (atomic) loss.
  std::size_t atoms = 10;
  diff::TrainConfig train;
};

/// Conditional flow q(theta | x) trained by maximum likelihood or the atomic sequential loss.
class NeuralPosteriorEstimator {
 public:
  NeuralPosteriorEstimator(NpeConfig cfg, std::shared_ptr<const Prior> prior, Eigen::Index series_dim,
                           Eigen::Index series_length, std::uint64_t seed);

  [[nodiscard]] const NpeConfig& config() const { return cfg_; }
  [[nodiscard]] const Prior& prior() const { return *prior_; }
  [[nodiscard]] const Conditioning& conditioning() const { return cond_; }
  [[nodiscard]] const MaskedAutoregressiveFlow& flow() const { return flow_; }
  [[nodiscard]] MaskedAutoregressiveFlow& flow() { return flow_; }
  [[nodiscard]] diff::ParamStore& store() { return store_; }

  [[nodiscard]] Vec features(const TimeSeries& x) const { return cond_.embedding.features(x); }
  [[nodiscard]] Mat features(const std::vector<TimeSeries>& xs) const { return cond_.embedding.features(xs); }

  /// Trains on the whole set; `atomic` selects the sequential loss.
  diff::TrainReport train(const TrainSet& data, bool atomic, Rng& rng);

  /// Mean negative log-likelihood of standardised parameters.
  [[nodiscard]] diff::Var mle_loss(const TrainSet& data, const std::vector<std::size_t>& items) const;
  /// Mean atomic loss; contrasts are drawn from the other items of the batch.
  [[nodiscard]] diff::Var atomic_loss(const TrainSet& data, const std::vector<std::size_t>& items, Rng& rng) const;

  /// log q(theta | x) in parameter space, one value per row of `thetas`.
  [[nodiscard]] Vec log_prob(const Mat& thetas, const Vec& raw_features) const;

  /// Draws from q(. | x), rejecting draws outside the prior support.
  [[nodiscard]] Mat sample(std::size_t n, const Vec& raw_features, Rng& rng) const;

  [[nodiscard]] Blob to_blob() const;
  static std::unique_ptr<NeuralPosteriorEstimator> from_blob(const Blob& blob, std::shared_ptr<const Prior> prior);

 private:
  NpeConfig cfg_;
  std::shared_ptr<const Prior> prior_;
  Eigen::Index series_dim_;
  Eigen::Index series_length_;
  diff::ParamStore store_;
  Conditioning cond_;
  MaskedAutoregressiveFlow flow_;
};

struct RoundSettings {
  std::size_t rounds = 10;
  std::size_t sims_per_round = 1000;
  unsigned threads = 1;
};

struct SequentialResult {
  std::vector<Mat> proposals;
  std::vector<diff::TrainReport> reports;
  std::uint64_t simulations = 0;
  TrainSet data;
};

/// Round 0 draws from the prior and trains by maximum likelihood; later rounds draw from
/// q(theta | observation) and train with the atomic loss on all data so far.
SequentialResult snpe_rounds(NeuralPosteriorEstimator& npe, const Simulator& sim, const TimeSeries& observation,
                             const RoundSettings& rounds, std::uint64_t seed);

}  // namespace nsbi
