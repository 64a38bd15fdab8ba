#pragma once

#include "nsbi/core/simulator.hpp"

namespace nsbi {

struct FWConfig {
  double mu = 0.01;
  double beta = 1.0;
  double phi_f = 1.0;
  double chi = 0.9;
  double alpha_0 = 2.1;
  double sigma_f = 0.752;
  double p_star = 0.0;
  int T = 100;
};

/// Full state history of one run; index t = 0 holds the initial state.
struct FWTrace {
  std::vector<double> p, d_f, d_c, n_f, n_c, a, w_f, w_c, g_f, g_c;
};

/// theta = (alpha_w, eta, sigma_c)
FWTrace fw_trace(const Vec& theta, const FWConfig& cfg, Rng& rng);

/// Emits log returns r_t = p_t - p_{t-1} for t = 1..T.
class FrankeWesterhoff : public Simulator {
 public:
  explicit FrankeWesterhoff(FWConfig cfg = {}) : cfg_(cfg) {}

  [[nodiscard]] std::string name() const override { return "fw"; }
  [[nodiscard]] Eigen::Index theta_dim() const override { return 3; }
  [[nodiscard]] Eigen::Index output_dim() const override { return 1; }
  [[nodiscard]] std::vector<std::string> param_names() const override { return {"alpha_w", "eta", "sigma_c"}; }
  [[nodiscard]] TimeSeries simulate(const Vec& theta, Rng& rng) const override;

  [[nodiscard]] const FWConfig& config() const { return cfg_; }

 private:
  FWConfig cfg_;
};

}  // namespace nsbi
