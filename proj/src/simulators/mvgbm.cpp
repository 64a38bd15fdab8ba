#include "nsbi/simulators/mvgbm.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace nsbi {

MvGBMConfig MvGBMConfig::standard() {
  MvGBMConfig cfg;
  cfg.sigma_matrix.resize(3, 3);
  cfg.sigma_matrix << 0.5, 0.1, 0.0, 0.0, 0.1, 0.3, 0.0, 0.0, 0.2;
  return cfg;
}

Vec MvGBMConfig::gamma() const { return 0.5 * sigma_matrix.rowwise().squaredNorm(); }

namespace {

struct Gaussian {
  Eigen::LLT<Mat> llt;
  double log_norm = 0.0;
};

Gaussian transition_gaussian(const MvGBMConfig& cfg, double dt) {
  const Mat cov = cfg.sigma_matrix * cfg.sigma_matrix.transpose() * dt;
  Gaussian g;
  g.llt.compute(cov);
  const Mat L = g.llt.matrixL();
  if (g.llt.info() != Eigen::Success || (L.diagonal().array() <= 0.0).any()) {
    throw std::domain_error("mvgbm transition covariance is singular");
  }
  const auto d = static_cast<double>(cov.rows());
  g.log_norm = -0.5 * d * std::log(2.0 * std::numbers::pi) - L.diagonal().array().log().sum();
  return g;
}

double gaussian_logpdf(const Gaussian& g, const Vec& resid) {
  const Vec z = g.llt.matrixL().solve(resid);
  return g.log_norm - 0.5 * z.squaredNorm();
}

}  // namespace

double mvgbm_transition_logpdf(const Vec& x_next, const Vec& x_curr, const Vec& theta, const MvGBMConfig& cfg,
                               double dt) {
  const Gaussian g = transition_gaussian(cfg, dt);
  return gaussian_logpdf(g, x_next - x_curr - (theta - cfg.gamma()) * dt);
}

double mvgbm_loglik(const TimeSeries& y, const Vec& theta, const MvGBMConfig& cfg) {
  const double dt = cfg.dt();
  const Gaussian g = transition_gaussian(cfg, dt);
  const Vec drift = (theta - cfg.gamma()) * dt;
  double ll = 0.0;
  for (Eigen::Index t = 1; t < y.length(); ++t) {
    ll += gaussian_logpdf(g, y.data.row(t).transpose() - y.data.row(t - 1).transpose() - drift);
  }
  return ll;
}

MvGBM::MvGBM(MvGBMConfig cfg) : cfg_(std::move(cfg)) {
  if (cfg_.sigma_matrix.rows() != cfg_.sigma_matrix.cols()) throw std::invalid_argument("sigma matrix must be square");
  if (cfg_.T < 2) throw std::invalid_argument("mvgbm needs T >= 2");
}

std::vector<std::string> MvGBM::param_names() const {
  std::vector<std::string> names;
  for (Eigen::Index i = 0; i < theta_dim(); ++i) names.push_back("b" + std::to_string(i + 1));
  return names;
}

TimeSeries MvGBM::simulate(const Vec& theta, Rng& rng) const {
  const Eigen::Index d = theta_dim();
  if (theta.size() != d) throw std::invalid_argument("mvgbm expects " + std::to_string(d) + " parameters");
  const double dt = cfg_.dt();
  const Vec drift = (theta - cfg_.gamma()) * dt;
  const Mat scale = cfg_.sigma_matrix * std::sqrt(dt);
  TimeSeries out;
  out.dt = dt;
  out.data = Mat::Zero(cfg_.T, d);
  for (Eigen::Index i = 0; i < d; ++i) out.columns.push_back("X" + std::to_string(i + 1));
  Vec w(d);
  for (int t = 1; t < cfg_.T; ++t) {
    for (Eigen::Index j = 0; j < d; ++j) w[j] = standard_normal(rng);
    out.data.row(t) = out.data.row(t - 1) + (drift + scale * w).transpose();
  }
  return out;
}

}  // namespace nsbi
