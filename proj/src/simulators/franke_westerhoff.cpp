#include "nsbi/simulators/franke_westerhoff.hpp"

#include <cmath>
#include <stdexcept>

namespace nsbi {

namespace {

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

FWTrace fw_trace(const Vec& theta, const FWConfig& cfg, Rng& rng) {
  if (theta.size() != 3) throw std::invalid_argument("franke-westerhoff expects 3 parameters, got " + std::to_string(theta.size()));
  if (cfg.T < 3) throw std::invalid_argument("franke-westerhoff needs T >= 3");
  const double alpha_w = theta[0], eta = theta[1], sigma_c = theta[2];
  const auto n = static_cast<std::size_t>(cfg.T) + 1;
  FWTrace tr;
  for (auto* v : {&tr.p, &tr.d_f, &tr.d_c, &tr.n_f, &tr.n_c, &tr.a, &tr.w_f, &tr.w_c, &tr.g_f, &tr.g_c}) v->assign(n, 0.0);

  double p_prev = 0.0;  // p_{-1}
  double a_prev = cfg.alpha_0;  // a_{-1}
  const double df_m1 = 0.0, dc_m1 = 0.0;  // d_{-1}

  tr.p[0] = 0.0;
  tr.d_f[0] = cfg.phi_f * (cfg.p_star - tr.p[0]) + cfg.sigma_f * standard_normal(rng);
  tr.d_c[0] = cfg.chi * (tr.p[0] - p_prev) + sigma_c * standard_normal(rng);
  tr.w_f[0] = tr.w_c[0] = 0.0;
  tr.a[0] = cfg.alpha_0;
  tr.n_f[0] = stable_sigmoid(cfg.beta * a_prev);
  tr.n_c[0] = 1.0 - tr.n_f[0];

  for (std::size_t t = 1; t < n; ++t) {
    tr.p[t] = tr.p[t - 1] + cfg.mu * (tr.n_f[t - 1] * tr.d_f[t - 1] + tr.n_c[t - 1] * tr.d_c[t - 1]);
    tr.d_f[t] = cfg.phi_f * (cfg.p_star - tr.p[t]) + cfg.sigma_f * standard_normal(rng);
    tr.d_c[t] = cfg.chi * (tr.p[t] - tr.p[t - 1]) + sigma_c * standard_normal(rng);
    const double dp = std::exp(tr.p[t]) - std::exp(tr.p[t - 1]);
    const double df_lag2 = t >= 2 ? tr.d_f[t - 2] : df_m1;
    const double dc_lag2 = t >= 2 ? tr.d_c[t - 2] : dc_m1;
    tr.g_f[t] = dp * df_lag2;
    tr.g_c[t] = dp * dc_lag2;
    tr.w_f[t] = eta * tr.w_f[t - 1] + (1.0 - eta) * tr.g_f[t];
    tr.w_c[t] = eta * tr.w_c[t - 1] + (1.0 - eta) * tr.g_c[t];
    tr.a[t] = alpha_w * (tr.w_f[t] - tr.w_c[t]) + cfg.alpha_0;
    tr.n_f[t] = stable_sigmoid(cfg.beta * tr.a[t - 1]);
    tr.n_c[t] = 1.0 - tr.n_f[t];
  }
  return tr;
}

TimeSeries FrankeWesterhoff::simulate(const Vec& theta, Rng& rng) const {
  const FWTrace tr = fw_trace(theta, cfg_, rng);
  TimeSeries out;
  out.data.resize(cfg_.T, 1);
  out.columns = {"r"};
  for (int t = 1; t <= cfg_.T; ++t) out.data(t - 1, 0) = tr.p[t] - tr.p[t - 1];
  return out;
}

}  // namespace nsbi
