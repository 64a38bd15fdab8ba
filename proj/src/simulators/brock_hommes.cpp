#include "nsbi/simulators/brock_hommes.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace nsbi {

namespace {

void check_theta(const Vec& theta) {
  if (theta.size() != 4) throw std::invalid_argument("brock-hommes expects 4 parameters, got " + std::to_string(theta.size()));
}

std::array<double, 4> strategy_g(const Vec& theta, const BHConfig& cfg) { return {cfg.g1, theta[0], theta[2], cfg.g4}; }
std::array<double, 4> strategy_b(const Vec& theta, const BHConfig& cfg) { return {cfg.b1, theta[1], theta[3], cfg.b4}; }

}  // namespace

std::array<double, 4> bh_weights(const std::array<double, 3>& history, const Vec& theta, const BHConfig& cfg) {
  check_theta(theta);
  const auto g = strategy_g(theta, cfg);
  const auto b = strategy_b(theta, cfg);
  const double y2 = history[0], y1 = history[1], y0 = history[2];
  const double R = cfg.R_gross;
  std::array<double, 4> logits{};
  for (int h = 0; h < 4; ++h) logits[h] = cfg.beta_intensity * (y0 - R * y1) * (g[h] * y2 + b[h] - R * y1);
  const double m = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (double& l : logits) {
    l = std::exp(l - m);
    z += l;
  }
  for (double& l : logits) l /= z;
  return logits;
}

double bh_transition_mean(const std::array<double, 3>& history, const Vec& theta, const BHConfig& cfg) {
  const auto n = bh_weights(history, theta, cfg);
  const auto g = strategy_g(theta, cfg);
  const auto b = strategy_b(theta, cfg);
  double f = 0.0;
  for (int h = 0; h < 4; ++h) f += n[h] * (g[h] * history[2] + b[h]);
  return f / cfg.R_gross;
}

double bh_loglik(const TimeSeries& y, const Vec& theta, const BHConfig& cfg) {
  const Eigen::Index T = y.length();
  if (T < 3 || y.dim() != 1) throw std::invalid_argument("bh_loglik expects a univariate series with T >= 3");
  const double sd = cfg.sigma_noise / cfg.R_gross;
  const double norm = -std::log(sd) - 0.5 * std::log(2.0 * std::numbers::pi);
  // Prepend the unobserved x_0 = 0.
  auto at = [&](Eigen::Index t) { return t == 0 ? 0.0 : y.data(t - 1, 0); };
  double ll = 0.0;
  for (Eigen::Index t = 3; t <= T; ++t) {
    const double f = bh_transition_mean({at(t - 3), at(t - 2), at(t - 1)}, theta, cfg);
    const double z = (at(t) - f) / sd;
    ll += norm - 0.5 * z * z;
  }
  return ll;
}

TimeSeries BrockHommes::simulate(const Vec& theta, Rng& rng) const {
  check_theta(theta);
  if (cfg_.T < 3) throw std::invalid_argument("brock-hommes needs T >= 3");
  std::normal_distribution<double> noise(0.0, cfg_.sigma_noise);
  TimeSeries out;
  out.data = Mat::Zero(cfg_.T, 1);
  out.columns = {"x"};
  std::array<double, 3> hist{0.0, 0.0, 0.0};
  for (int t = 2; t < cfg_.T; ++t) {
    const double next = bh_transition_mean(hist, theta, cfg_) + noise(rng) / cfg_.R_gross;
    out.data(t, 0) = next;
    hist = {hist[1], hist[2], next};
  }
  return out;
}

}  // namespace nsbi
