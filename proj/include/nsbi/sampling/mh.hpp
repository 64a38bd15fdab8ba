#pragma once

#include <functional>
#include <string>
#include <vector>

#include "nsbi/core/rng.hpp"
#include "nsbi/core/types.hpp"

namespace nsbi {

using LogTarget = std::function<double(const Vec&)>;

struct MHConfig {
  std::size_t pilot_steps = 50000;
  std::size_t main_steps = 100000;
  std::size_t thin = 100;
  /// Per-dimension standard deviation of the isotropic pilot proposal. Empty means pilot_scale in every dimension.
  Vec pilot_sd;
  double pilot_scale = 0.05;
  /// Proposal scale; zero selects 2/sqrt(d).
  double ell = 0.0;
  double jitter = 1e-8;
};

/// Every step of a random-walk chain, or its thinned subsequence.
struct ChainRecord {
  Mat thetas;
  Vec log_target;
  std::vector<char> accepted;
  std::size_t steps = 0;
  std::size_t accepts = 0;

  [[nodiscard]] double acceptance_rate() const {
    return steps == 0 ? 0.0 : static_cast<double>(accepts) / static_cast<double>(steps);
  }
};

struct MHResult {
  Mat samples;
  Mat proposal_cov;
  double pilot_acceptance = 0.0;
  double main_acceptance = 0.0;
  bool pilot_fallback = false;
  std::vector<std::string> warnings;
  ChainRecord pilot;
  ChainRecord main;
};

double default_ell(Eigen::Index d);

/// Gaussian random-walk Metropolis. The incumbent's log-target is carried, never re-evaluated.
/// With thin = k, the state after every k-th step is kept; record_all keeps every step.
ChainRecord rw_metropolis(const LogTarget& log_target, const Vec& theta0, double log_target0, const Mat& proposal_cov,
                          std::size_t steps, std::size_t thin, Rng& rng, bool record_all = false);

/// Pilot run with an isotropic proposal, then a main run with ell^2 times the pilot covariance.
MHResult mh_chain(const LogTarget& log_target, const MHConfig& cfg, const Vec& theta0, Rng& rng,
                  bool record_all = false);

/// Draws n_out indices with replacement, probability proportional to exp(log_weights).
std::vector<std::size_t> sir_indices(const Vec& log_weights, std::size_t n_out, Rng& rng);
Mat sir_resample(const Mat& samples, const Vec& log_weights, std::size_t n_out, Rng& rng);

}  // namespace nsbi
