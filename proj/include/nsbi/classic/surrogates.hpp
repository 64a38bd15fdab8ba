#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "nsbi/core/prior.hpp"
#include "nsbi/core/simulator.hpp"
#include "nsbi/sampling/mh.hpp"

namespace nsbi {

/// 0.9 * min(sd, iqr / 1.34) * n^(-1/5); falls back to sd when the IQR is zero.
double silverman_bandwidth(double sd, double iqr, std::size_t n);

/// Scalar bandwidth for the rows of `sample`: Silverman per column, averaged over columns.
double kde_bandwidth(const Mat& sample);

/// log of (1/S) sum_s eps^-d phi_d(||point - x_s|| / eps).
double kde_log_density(const Vec& point, const Mat& sample, double eps);

/// Gaussian fitted by maximum likelihood to each simulation (or to all of them pooled), then
/// log of the Monte Carlo average of prod_t N(y_t; m, C).
double parametric_loglik(const TimeSeries& y, const std::vector<TimeSeries>& sims, bool pooled = false);

/// log of (1/R) sum_r prod_t KDE_r(y_t), or a single KDE over the pooled simulations.
double kde_loglik(const TimeSeries& y, const std::vector<TimeSeries>& sims, bool pooled = false);

/// Euclidean distance between naive summary vectors.
double summary_distance(const TimeSeries& a, const TimeSeries& b);

/// log of the fraction of simulations within `epsilon` of y; -inf when none are.
double abc_loglik(const TimeSeries& y, const std::vector<TimeSeries>& sims, double epsilon);

/// sum_t log (1/R) sum_r N(y_t; x_t^(r), noise_sd^2 I).
double latent_loglik(const TimeSeries& y, const std::vector<TimeSeries>& sims, double noise_sd);

enum class SurrogateKind { kParametric, kKde, kAbc, kLatent };

SurrogateKind parse_surrogate_kind(const std::string& name);
std::string surrogate_kind_name(SurrogateKind kind);

struct SurrogateConfig {
  SurrogateKind kind = SurrogateKind::kKde;
  std::size_t R = 1;
  bool pooled = false;
  double abc_epsilon = 0.0;
  double latent_noise_sd = 0.1;
};

/// Stochastic log-likelihood estimate at theta: simulates R series and applies the chosen estimator.
class SurrogateLikelihood {
 public:
  SurrogateLikelihood(SurrogateConfig cfg, std::shared_ptr<const Simulator> sim, TimeSeries observation);

  [[nodiscard]] double operator()(const Vec& theta, Rng& rng) const;
  [[nodiscard]] const SurrogateConfig& config() const { return cfg_; }

 private:
  SurrogateConfig cfg_;
  std::shared_ptr<const Simulator> sim_;
  TimeSeries y_;
};

/// ABC tolerance: the `quantile` of distances between y and `pilot` prior-predictive simulations.
double abc_epsilon_from_pilot(const TimeSeries& y, const Simulator& sim, const Prior& prior, std::size_t pilot,
                              double quantile, Rng& rng);

using StochasticLogLik = std::function<double(const Vec& theta, Rng& rng)>;

/// Pseudo-marginal random-walk MH. The likelihood is estimated once at theta0 and once at each
/// proposal (also outside the prior support); the incumbent keeps its estimate.
ChainRecord pm_mh(const StochasticLogLik& loglik, const Prior& prior, const Mat& proposal_cov, const Vec& theta0,
                  std::size_t n, Rng& rng);

/// Iteration counts for a two-phase run spending exactly `budget` simulations with R per estimate.
struct BudgetSplit {
  std::size_t pilot = 0;
  std::size_t main = 0;
  std::size_t thin = 0;
};

BudgetSplit split_budget(std::size_t budget, std::size_t R, std::size_t n_samples = 1000);

/// Pilot plus main pseudo-marginal run within a simulation budget.
MHResult pm_mh_budget(const StochasticLogLik& loglik, const Prior& prior, std::size_t budget, std::size_t R,
                      const Vec& theta0, const Vec& pilot_sd, Rng& rng, std::size_t n_samples = 1000,
                      bool record_all = false);

}  // namespace nsbi
