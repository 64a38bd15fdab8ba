#pragma once

#include <array>

#include "nsbi/core/simulator.hpp"

namespace nsbi {

struct BHConfig {
  int H = 4;
  double R_gross = 1.0;
  double beta_intensity = 120.0;
  double sigma_noise = 0.04;
  // Strategies 1 and 4 are fixed; theta = (g2, b2, g3, b3) fills slots 2 and 3.
  double g1 = 0.0;
  double b1 = 0.0;
  double g4 = 1.01;
  double b4 = 0.0;
  int T = 100;
};

/// Strategy weights n_h for the next step given (y_{t-2}, y_{t-1}, y_t).
std::array<double, 4> bh_weights(const std::array<double, 3>& history, const Vec& theta, const BHConfig& cfg);

/// Mean of y_{t+1} given history (y_{t-2}, y_{t-1}, y_t).
double bh_transition_mean(const std::array<double, 3>& history, const Vec& theta, const BHConfig& cfg);

/// Exact log-likelihood of a univariate series x_1..x_T under x_0 = x_1 = x_2 = 0 initial states.
double bh_loglik(const TimeSeries& y, const Vec& theta, const BHConfig& cfg);

class BrockHommes : public Simulator {
 public:
  explicit BrockHommes(BHConfig cfg = {}) : cfg_(cfg) {}

  [[nodiscard]] std::string name() const override { return "bh"; }
  [[nodiscard]] Eigen::Index theta_dim() const override { return 4; }
  [[nodiscard]] Eigen::Index output_dim() const override { return 1; }
  [[nodiscard]] std::vector<std::string> param_names() const override { return {"g2", "b2", "g3", "b3"}; }
  [[nodiscard]] TimeSeries simulate(const Vec& theta, Rng& rng) const override;

  [[nodiscard]] const BHConfig& config() const { return cfg_; }

 private:
  BHConfig cfg_;
};

}  // namespace nsbi
