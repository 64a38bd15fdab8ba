#pragma once

#include <functional>
#include <memory>
#include <string>

#include "nsbi/core/prior.hpp"
#include "nsbi/core/simulator.hpp"
#include "nsbi/sampling/mh.hpp"

namespace nsbi {

/// A benchmark problem: simulator, box prior, generating parameter and, where tractable, the exact likelihood.
struct ModelSpec {
  std::string id;
  std::shared_ptr<const Simulator> simulator;
  std::shared_ptr<const BoxUniform> prior;
  Vec theta_star;
  std::function<double(const TimeSeries&, const Vec&)> exact_loglik;
};

/// Known ids: bh1, bh2, mvgbm, fw.
ModelSpec make_model(const std::string& id);
std::vector<std::string> model_ids();

/// MH on the exact posterior; starts at theta0 (the generating value when known).
MHResult ground_truth_posterior(const ModelSpec& model, const TimeSeries& observation, const MHConfig& cfg,
                                const Vec& theta0, Rng& rng);

/// Pilot proposal sd proportional to the prior width.
Vec prior_scaled_sd(const BoxUniform& prior, double fraction);

}  // namespace nsbi
