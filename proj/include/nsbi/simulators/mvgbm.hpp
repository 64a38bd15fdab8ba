#pragma once

#include "nsbi/core/simulator.hpp"

namespace nsbi {

struct MvGBMConfig {
  Mat sigma_matrix;
  int T = 100;

  static MvGBMConfig standard();

  /// gamma_i = 1/2 sum_j sigma_ij^2
  [[nodiscard]] Vec gamma() const;
  [[nodiscard]] double dt() const { return 1.0 / (T - 1); }
};

/// Log-density of one exact transition of the log-price state.
double mvgbm_transition_logpdf(const Vec& x_next, const Vec& x_curr, const Vec& theta, const MvGBMConfig& cfg,
                               double dt);

double mvgbm_loglik(const TimeSeries& y, const Vec& theta, const MvGBMConfig& cfg);

/// Simulates the log-price state X on T points starting at X_0 = 0, which is the first row.
class MvGBM : public Simulator {
 public:
  explicit MvGBM(MvGBMConfig cfg = MvGBMConfig::standard());

  [[nodiscard]] std::string name() const override { return "mvgbm"; }
  [[nodiscard]] Eigen::Index theta_dim() const override { return cfg_.sigma_matrix.rows(); }
  [[nodiscard]] Eigen::Index output_dim() const override { return cfg_.sigma_matrix.rows(); }
  [[nodiscard]] std::vector<std::string> param_names() const override;
  [[nodiscard]] TimeSeries simulate(const Vec& theta, Rng& rng) const override;

  [[nodiscard]] const MvGBMConfig& config() const { return cfg_; }

 private:
  MvGBMConfig cfg_;
};

}  // namespace nsbi
