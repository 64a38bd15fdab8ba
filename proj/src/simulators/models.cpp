#include "nsbi/simulators/models.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "nsbi/simulators/brock_hommes.hpp"
#include "nsbi/simulators/franke_westerhoff.hpp"
#include "nsbi/simulators/mvgbm.hpp"

namespace nsbi {

namespace {

Vec vec(std::initializer_list<double> v) {
  Vec out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

ModelSpec make_bh(const std::string& id, double beta, Vec lower, Vec upper, Vec theta_star) {
  BHConfig cfg;
  cfg.beta_intensity = beta;
  ModelSpec m;
  m.id = id;
  m.simulator = std::make_shared<BrockHommes>(cfg);
  m.prior = std::make_shared<BoxUniform>(std::move(lower), std::move(upper));
  m.theta_star = std::move(theta_star);
  m.exact_loglik = [cfg](const TimeSeries& y, const Vec& theta) { return bh_loglik(y, theta, cfg); };
  return m;
}

}  // namespace

ModelSpec make_model(const std::string& id) {
  if (id == "bh1") {
    return make_bh(id, 120.0, vec({0, 0, 0, -1}), vec({1, 1, 1, 0}), vec({0.9, 0.2, 0.9, -0.2}));
  }
  if (id == "bh2") {
    return make_bh(id, 10.0, vec({-1, -1, 0, 0}), vec({0, 0, 1, 1}), vec({-0.7, -0.4, 0.5, 0.3}));
  }
  if (id == "mvgbm") {
    const MvGBMConfig cfg = MvGBMConfig::standard();
    ModelSpec m;
    m.id = id;
    m.simulator = std::make_shared<MvGBM>(cfg);
    m.prior = std::make_shared<BoxUniform>(vec({-1, -1, -1}), vec({1, 1, 1}));
    m.theta_star = vec({0.2, -0.5, 0.0});
    m.exact_loglik = [cfg](const TimeSeries& y, const Vec& theta) { return mvgbm_loglik(y, theta, cfg); };
    return m;
  }
  if (id == "fw") {
    ModelSpec m;
    m.id = id;
    m.simulator = std::make_shared<FrankeWesterhoff>();
    m.prior = std::make_shared<BoxUniform>(vec({0, 0, 0}), vec({15000, 1, 5}));
    return m;
  }
  throw std::invalid_argument("unknown model '" + id + "' (expected one of bh1, bh2, mvgbm, fw)");
}

std::vector<std::string> model_ids() { return {"bh1", "bh2", "mvgbm", "fw"}; }

Vec prior_scaled_sd(const BoxUniform& prior, double fraction) { return fraction * (prior.upper() - prior.lower()); }

MHResult ground_truth_posterior(const ModelSpec& model, const TimeSeries& observation, const MHConfig& cfg,
                                const Vec& theta0, Rng& rng) {
  if (!model.exact_loglik) throw std::invalid_argument("model '" + model.id + "' has no tractable likelihood");
  const auto& prior = *model.prior;
  const auto& loglik = model.exact_loglik;
  LogTarget target = [&](const Vec& theta) {
    const double lp = prior.log_prob(theta);
    if (!std::isfinite(lp)) return -std::numeric_limits<double>::infinity();
    return lp + loglik(observation, theta);
  };
  return mh_chain(target, cfg, theta0, rng);
}

}  // namespace nsbi
