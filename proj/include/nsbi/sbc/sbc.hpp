#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "nsbi/core/prior.hpp"
#include "nsbi/core/simulator.hpp"

namespace nsbi {

class NeuralPosteriorEstimator;
class RatioEstimator;

/// Draws L approximately independent posterior samples for one observation.
class PosteriorSampler {
 public:
  virtual ~PosteriorSampler() = default;
  [[nodiscard]] virtual std::string method() const = 0;
  [[nodiscard]] virtual Mat sample(std::size_t L, const TimeSeries& observation, Rng& rng) const = 0;
  /// Simulator calls needed per posterior; zero for amortized samplers.
  [[nodiscard]] virtual std::size_t simulations_per_posterior() const { return 0; }
};

class FunctionSampler : public PosteriorSampler {
 public:
  using Fn = std::function<Mat(std::size_t, const TimeSeries&, Rng&)>;
  FunctionSampler(std::string method, Fn fn, std::size_t sims_per_posterior = 0)
      : method_(std::move(method)), fn_(std::move(fn)), sims_(sims_per_posterior) {}
  [[nodiscard]] std::string method() const override { return method_; }
  [[nodiscard]] Mat sample(std::size_t L, const TimeSeries& obs, Rng& rng) const override { return fn_(L, obs, rng); }
  [[nodiscard]] std::size_t simulations_per_posterior() const override { return sims_; }

 private:
  std::string method_;
  Fn fn_;
  std::size_t sims_;
};

/// Independent draws from the flow.
class FlowSampler : public PosteriorSampler {
 public:
  explicit FlowSampler(std::shared_ptr<const NeuralPosteriorEstimator> npe) : npe_(std::move(npe)) {}
  [[nodiscard]] std::string method() const override { return "npe"; }
  [[nodiscard]] Mat sample(std::size_t L, const TimeSeries& obs, Rng& rng) const override;

 private:
  std::shared_ptr<const NeuralPosteriorEstimator> npe_;
};

/// Sampling-importance-resampling from the prior weighted by the learned ratio.
class RatioSirSampler : public PosteriorSampler {
 public:
  RatioSirSampler(std::shared_ptr<const RatioEstimator> nre, std::size_t proposals_per_sample = 100)
      : nre_(std::move(nre)), proposals_per_sample_(proposals_per_sample) {}
  [[nodiscard]] std::string method() const override { return "nre"; }
  [[nodiscard]] Mat sample(std::size_t L, const TimeSeries& obs, Rng& rng) const override;

 private:
  std::shared_ptr<const RatioEstimator> nre_;
  std::size_t proposals_per_sample_;
};

/// Per-dimension count of samples below theta_tilde. Exact ties are ordered by independent uniform draws.
std::vector<std::size_t> rank_statistic(const Mat& samples, const Vec& theta_tilde, Rng& rng);

struct RankRecord {
  std::size_t replicate = 0;
  std::uint64_t seed = 0;
  Vec theta_tilde;
  std::vector<std::size_t> ranks;
};

struct RankHistogram {
  std::size_t L = 0;
  std::size_t bins = 20;
  std::size_t total = 0;
  std::vector<std::vector<std::size_t>> counts;  // per dimension, per bin
  std::vector<double> expected;                  // per bin
  std::vector<double> band_lower;                // 0.5% binomial quantile per bin
  std::vector<double> band_upper;                // 99.5% binomial quantile per bin

  /// Largest |count - expected| over bins, per dimension.
  [[nodiscard]] std::vector<double> max_deviation() const;
};

/// Ranks 0..L are split into `bins` contiguous groups of near-equal size.
std::size_t rank_bin(std::size_t rank, std::size_t L, std::size_t bins);

RankHistogram make_histogram(const std::vector<RankRecord>& records, std::size_t dim, std::size_t L, std::size_t bins = 20);

struct UniformityResult {
  double chi2 = 0.0;
  double p_value = 1.0;
  std::size_t dof = 0;
};

/// Pearson chi-square against the discrete uniform rank distribution, one result per dimension.
std::vector<UniformityResult> uniformity_check(const RankHistogram& hist);

/// Upper tail probability of the chi-square distribution.
double chi2_survival(double chi2, double dof);

struct SbcConfig {
  std::size_t replicates = 500;
  std::size_t L = 100;
  std::size_t bins = 20;
  std::uint64_t seed = 0;
};

struct SbcResult {
  std::vector<RankRecord> records;
  RankHistogram histogram;
  std::vector<UniformityResult> uniformity;
  std::vector<std::string> skipped;
};

SbcResult sbc_run(const Prior& prior, const Simulator& sim, const PosteriorSampler& sampler, const SbcConfig& cfg);

std::string ranks_csv(const std::vector<RankRecord>& records);
nlohmann::json histogram_json(const RankHistogram& hist, const std::vector<UniformityResult>& uniformity);

}  // namespace nsbi
