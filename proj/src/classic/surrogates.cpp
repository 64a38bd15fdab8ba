#include "nsbi/classic/surrogates.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "nsbi/core/log.hpp"
#include "nsbi/summaries/naive.hpp"

namespace nsbi {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_mean_exp(const std::vector<double>& v) {
  double m = kNegInf;
  for (double x : v) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double acc = 0.0;
  for (double x : v) acc += std::exp(x - m);
  return m + std::log(acc / static_cast<double>(v.size()));
}

Mat stack(const std::vector<TimeSeries>& sims) {
  Eigen::Index rows = 0;
  for (const auto& s : sims) rows += s.length();
  Mat out(rows, sims.front().dim());
  Eigen::Index r = 0;
  for (const auto& s : sims) {
    out.middleRows(r, s.length()) = s.data;
    r += s.length();
  }
  return out;
}

void check_sims(const TimeSeries& y, const std::vector<TimeSeries>& sims) {
  if (sims.empty()) throw std::invalid_argument("surrogate likelihood needs at least one simulation");
  for (const auto& s : sims)
    if (s.dim() != y.dim()) throw std::invalid_argument("simulation and observation dimensions differ");
}

double gaussian_fit_loglik(const TimeSeries& y, const Mat& x) {
  const auto S = static_cast<double>(x.rows());
  const Vec m = x.colwise().mean().transpose();
  const Mat c = x.rowwise() - m.transpose();
  const Mat cov = c.transpose() * c / S;
  Eigen::LLT<Mat> llt(cov);
  const Mat L = llt.matrixL();
  if (llt.info() != Eigen::Success || !(L.diagonal().array() > 1e-300).all()) {
    throw std::domain_error("degenerate fit: simulated series has zero variance");
  }
  const auto d = static_cast<double>(x.cols());
  const double log_norm = -0.5 * d * std::log(2.0 * std::numbers::pi) - L.diagonal().array().log().sum();
  double ll = 0.0;
  for (Eigen::Index t = 0; t < y.length(); ++t) {
    const Vec z = llt.matrixL().solve(y.data.row(t).transpose() - m);
    ll += log_norm - 0.5 * z.squaredNorm();
  }
  return ll;
}

double kde_series_loglik(const TimeSeries& y, const Mat& x) {
  const double eps = kde_bandwidth(x);
  double ll = 0.0;
  for (Eigen::Index t = 0; t < y.length(); ++t) ll += kde_log_density(y.data.row(t).transpose(), x, eps);
  return ll;
}

}  // namespace

double silverman_bandwidth(double sd, double iqr, std::size_t n) {
  const double spread = iqr > 0.0 ? std::min(sd, iqr / 1.34) : sd;
  return 0.9 * spread * std::pow(static_cast<double>(n), -0.2);
}

double kde_bandwidth(const Mat& sample) {
  const Eigen::Index S = sample.rows();
  if (S < 2) throw std::invalid_argument("kde needs at least 2 simulated points");
  double total = 0.0;
  for (Eigen::Index j = 0; j < sample.cols(); ++j) {
    const Vec col = sample.col(j);
    const double mean = col.mean();
    const double sd = std::sqrt((col.array() - mean).square().sum() / static_cast<double>(S - 1));
    if (!(sd > 0.0)) throw std::domain_error("degenerate fit: simulated series has zero variance");
    std::vector<double> sorted(col.data(), col.data() + S);
    std::sort(sorted.begin(), sorted.end());
    const double iqr = quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);
    total += silverman_bandwidth(sd, iqr, static_cast<std::size_t>(S));
  }
  return total / static_cast<double>(sample.cols());
}

double kde_log_density(const Vec& point, const Mat& sample, double eps) {
  const auto d = static_cast<double>(sample.cols());
  const double log_norm = -d * std::log(eps) - 0.5 * d * std::log(2.0 * std::numbers::pi);
  const Vec r2 = (sample.rowwise() - point.transpose()).rowwise().squaredNorm() / (eps * eps);
  const double m = -0.5 * r2.minCoeff();
  const double acc = (-0.5 * r2.array() - m).exp().sum();
  return log_norm + m + std::log(acc / static_cast<double>(sample.rows()));
}

double parametric_loglik(const TimeSeries& y, const std::vector<TimeSeries>& sims, bool pooled) {
  check_sims(y, sims);
  if (pooled) return gaussian_fit_loglik(y, stack(sims));
  std::vector<double> per;
  per.reserve(sims.size());
  for (const auto& s : sims) per.push_back(gaussian_fit_loglik(y, s.data));
  return log_mean_exp(per);
}

double kde_loglik(const TimeSeries& y, const std::vector<TimeSeries>& sims, bool pooled) {
  check_sims(y, sims);
  if (pooled) return kde_series_loglik(y, stack(sims));
  std::vector<double> per;
  per.reserve(sims.size());
  for (const auto& s : sims) per.push_back(kde_series_loglik(y, s.data));
  return log_mean_exp(per);
}

double summary_distance(const TimeSeries& a, const TimeSeries& b) {
  return (naive_summaries(a) - naive_summaries(b)).norm();
}

double abc_loglik(const TimeSeries& y, const std::vector<TimeSeries>& sims, double epsilon) {
  check_sims(y, sims);
  if (!(epsilon > 0.0)) throw std::invalid_argument("abc tolerance must be positive");
  const Vec sy = naive_summaries(y);
  std::size_t hits = 0;
  for (const auto& s : sims)
    if ((naive_summaries(s) - sy).norm() <= epsilon) ++hits;
  if (hits == 0) return kNegInf;
  return std::log(static_cast<double>(hits) / static_cast<double>(sims.size()));
}

double latent_loglik(const TimeSeries& y, const std::vector<TimeSeries>& sims, double noise_sd) {
  check_sims(y, sims);
  if (!(noise_sd > 0.0)) throw std::invalid_argument("latent noise sd must be positive");
  const auto d = static_cast<double>(y.dim());
  const double log_norm = -d * std::log(noise_sd) - 0.5 * d * std::log(2.0 * std::numbers::pi);
  double ll = 0.0;
  std::vector<double> per(sims.size());
  for (Eigen::Index t = 0; t < y.length(); ++t) {
    for (std::size_t r = 0; r < sims.size(); ++r) {
      if (sims[r].length() != y.length()) throw std::invalid_argument("latent estimator needs equal series lengths");
      const double z2 = (y.data.row(t) - sims[r].data.row(t)).squaredNorm() / (noise_sd * noise_sd);
      per[r] = log_norm - 0.5 * z2;
    }
    ll += log_mean_exp(per);
  }
  return ll;
}

SurrogateKind parse_surrogate_kind(const std::string& name) {
  if (name == "parametric") return SurrogateKind::kParametric;
  if (name == "kde") return SurrogateKind::kKde;
  if (name == "abc") return SurrogateKind::kAbc;
  if (name == "latent") return SurrogateKind::kLatent;
  throw std::invalid_argument("unknown surrogate '" + name + "'");
}

std::string surrogate_kind_name(SurrogateKind kind) {
  switch (kind) {
    case SurrogateKind::kParametric: return "parametric";
    case SurrogateKind::kKde: return "kde";
    case SurrogateKind::kAbc: return "abc";
    case SurrogateKind::kLatent: return "latent";
  }
  return "kde";
}

SurrogateLikelihood::SurrogateLikelihood(SurrogateConfig cfg, std::shared_ptr<const Simulator> sim, TimeSeries observation)
    : cfg_(cfg), sim_(std::move(sim)), y_(std::move(observation)) {
  if (cfg_.R == 0) throw std::invalid_argument("R must be >= 1");
  if (cfg_.kind == SurrogateKind::kAbc && !(cfg_.abc_epsilon > 0.0)) throw std::invalid_argument("abc tolerance must be positive");
}

double SurrogateLikelihood::operator()(const Vec& theta, Rng& rng) const {
  std::vector<TimeSeries> sims;
  sims.reserve(cfg_.R);
  for (std::size_t r = 0; r < cfg_.R; ++r) sims.push_back(sim_->simulate(theta, rng));
  switch (cfg_.kind) {
    case SurrogateKind::kParametric: return parametric_loglik(y_, sims, cfg_.pooled);
    case SurrogateKind::kKde: return kde_loglik(y_, sims, cfg_.pooled);
    case SurrogateKind::kAbc: return abc_loglik(y_, sims, cfg_.abc_epsilon);
    case SurrogateKind::kLatent: return latent_loglik(y_, sims, cfg_.latent_noise_sd);
  }
  return kNegInf;
}

double abc_epsilon_from_pilot(const TimeSeries& y, const Simulator& sim, const Prior& prior, std::size_t pilot,
                              double quantile, Rng& rng) {
  if (pilot == 0) throw std::invalid_argument("abc pilot size must be positive");
  const Vec sy = naive_summaries(y);
  std::vector<double> dist;
  dist.reserve(pilot);
  for (std::size_t i = 0; i < pilot; ++i) {
    const Vec theta = prior.sample(rng);
    dist.push_back((naive_summaries(sim.simulate(theta, rng)) - sy).norm());
  }
  std::sort(dist.begin(), dist.end());
  return quantile_sorted(dist, quantile);
}

ChainRecord pm_mh(const StochasticLogLik& loglik, const Prior& prior, const Mat& proposal_cov, const Vec& theta0,
                  std::size_t n, Rng& rng) {
  if (n == 0) throw std::invalid_argument("pm_mh needs at least one iteration");
  const LogTarget target = [&](const Vec& theta) {
    const double ll = loglik(theta, rng);
    const double lp = prior.log_prob(theta);
    return std::isfinite(lp) ? lp + ll : kNegInf;
  };
  const double lt0 = target(theta0);
  if (!std::isfinite(lt0)) throw std::invalid_argument("likelihood estimate at the initial point is not finite");
  ChainRecord rec = rw_metropolis(target, theta0, lt0, proposal_cov, n, 1, rng, true);
  if (rec.accepts == 0) {
    std::ostringstream msg;
    msg << "pseudo-marginal chain accepted no proposals (acceptance rate " << rec.acceptance_rate() << ")";
    log_warning(msg.str());
  }
  return rec;
}

BudgetSplit split_budget(std::size_t budget, std::size_t R, std::size_t n_samples) {
  if (R == 0 || budget < 2 * R) throw std::invalid_argument("budget must cover at least two likelihood estimates");
  const std::size_t iterations = budget / R - 1;
  BudgetSplit s;
  s.thin = iterations * 2 / 3 / n_samples;
  if (s.thin == 0) {
    throw std::invalid_argument("budget of " + std::to_string(budget) + " simulations is too small for " +
                                std::to_string(n_samples) + " samples");
  }
  s.main = n_samples * s.thin;
  s.pilot = iterations - s.main;
  return s;
}

MHResult pm_mh_budget(const StochasticLogLik& loglik, const Prior& prior, std::size_t budget, std::size_t R,
                      const Vec& theta0, const Vec& pilot_sd, Rng& rng, std::size_t n_samples,
                      bool record_all) {
  const BudgetSplit split = split_budget(budget, R, n_samples);
  const LogTarget target = [&](const Vec& theta) {
    const double ll = loglik(theta, rng);
    const double lp = prior.log_prob(theta);
    return std::isfinite(lp) ? lp + ll : kNegInf;
  };
  MHConfig cfg;
  cfg.pilot_steps = split.pilot;
  cfg.main_steps = split.main;
  cfg.thin = split.thin;
  cfg.pilot_sd = pilot_sd;
  return mh_chain(target, cfg, theta0, rng, record_all);
}

}  // namespace nsbi
