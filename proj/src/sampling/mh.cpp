#include "nsbi/sampling/mh.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "nsbi/core/log.hpp"

namespace nsbi {

double default_ell(Eigen::Index d) { return 2.0 / std::sqrt(static_cast<double>(d)); }

ChainRecord rw_metropolis(const LogTarget& log_target, const Vec& theta0, double log_target0, const Mat& proposal_cov,
                          std::size_t steps, std::size_t thin, Rng& rng, bool record_all) {
  if (thin == 0) throw std::invalid_argument("thinning must be >= 1");
  const Eigen::Index d = theta0.size();
  Eigen::LLT<Mat> llt(proposal_cov);
  if (llt.info() != Eigen::Success) throw std::invalid_argument("proposal covariance is not positive definite");
  const Mat L = llt.matrixL();

  const std::size_t kept = record_all ? steps : steps / thin;
  ChainRecord rec;
  rec.thetas.resize(static_cast<Eigen::Index>(kept), d);
  rec.log_target.resize(static_cast<Eigen::Index>(kept));
  rec.accepted.reserve(kept);
  rec.steps = steps;

  Vec current = theta0;
  double current_lt = log_target0;
  Vec z(d);
  Eigen::Index row = 0;
  for (std::size_t s = 1; s <= steps; ++s) {
    for (Eigen::Index j = 0; j < d; ++j) z[j] = standard_normal(rng);
    const Vec proposal = current + L * z;
    double lt = log_target(proposal);
    if (std::isnan(lt)) lt = -std::numeric_limits<double>::infinity();
    const double log_u = std::log(uniform01(rng));
    const bool accept = lt > -std::numeric_limits<double>::infinity() && log_u < lt - current_lt;
    if (accept) {
      current = proposal;
      current_lt = lt;
      ++rec.accepts;
    }
    if (record_all || s % thin == 0) {
      rec.thetas.row(row) = current.transpose();
      rec.log_target[row] = current_lt;
      rec.accepted.push_back(accept ? 1 : 0);
      ++row;
    }
  }
  return rec;
}

MHResult mh_chain(const LogTarget& log_target, const MHConfig& cfg, const Vec& theta0, Rng& rng, bool record_all) {
  const Eigen::Index d = theta0.size();
  const double lt0 = log_target(theta0);
  if (!std::isfinite(lt0)) throw std::invalid_argument("log target is not finite at the initial point");
  if (cfg.thin == 0) throw std::invalid_argument("thinning must be >= 1");

  MHResult res;
  Vec pilot_sd = cfg.pilot_sd.size() == d ? cfg.pilot_sd : Vec::Constant(d, cfg.pilot_scale);
  const Mat pilot_cov = pilot_sd.array().square().matrix().asDiagonal();
  Vec start = theta0;
  double start_lt = lt0;
  Mat cov = pilot_cov;

  if (cfg.pilot_steps > 0) {
    res.pilot = rw_metropolis(log_target, theta0, lt0, pilot_cov, cfg.pilot_steps, 1, rng, true);
    res.pilot_acceptance = res.pilot.acceptance_rate();
    const Eigen::Index n = res.pilot.thetas.rows();
    // Covariance from the second half of the pilot run.
    const Mat half = res.pilot.thetas.bottomRows(n - n / 2);
    const Vec mean = half.colwise().mean().transpose();
    const Mat centered = half.rowwise() - mean.transpose();
    Mat emp = centered.transpose() * centered / std::max<double>(1.0, static_cast<double>(half.rows() - 1));
    Eigen::LLT<Mat> check(emp);
    const bool singular = check.info() != Eigen::Success || !emp.allFinite() ||
                          (Eigen::SelfAdjointEigenSolver<Mat>(emp).eigenvalues().array() <= 1e-14).any();
    if (singular) {
      std::ostringstream msg;
      msg << "pilot covariance is singular (pilot acceptance " << res.pilot_acceptance
          << "); falling back to the isotropic pilot proposal";
      res.warnings.push_back(msg.str());
      log_warning(msg.str());
      res.pilot_fallback = true;
      cov = pilot_cov;
    } else {
      const double ell = cfg.ell > 0.0 ? cfg.ell : default_ell(d);
      cov = ell * ell * emp + cfg.jitter * Mat::Identity(d, d);
    }
    start = res.pilot.thetas.row(n - 1).transpose();
    start_lt = res.pilot.log_target[n - 1];
    if (!record_all) res.pilot.thetas.resize(0, d);
  } else {
    const double ell = cfg.ell > 0.0 ? cfg.ell : default_ell(d);
    cov = ell * ell * pilot_cov + cfg.jitter * Mat::Identity(d, d);
  }
  res.proposal_cov = cov;
  res.main = rw_metropolis(log_target, start, start_lt, cov, cfg.main_steps, cfg.thin, rng, record_all);
  res.main_acceptance = res.main.acceptance_rate();
  if (record_all) {
    const std::size_t n = cfg.main_steps / cfg.thin;
    res.samples.resize(static_cast<Eigen::Index>(n), d);
    for (std::size_t i = 0; i < n; ++i)
      res.samples.row(static_cast<Eigen::Index>(i)) = res.main.thetas.row(static_cast<Eigen::Index>((i + 1) * cfg.thin - 1));
  } else {
    res.samples = res.main.thetas;
  }
  if (res.main.accepts == 0) {
    std::ostringstream msg;
    msg << "main chain accepted no proposals (acceptance rate 0 over " << cfg.main_steps << " steps)";
    res.warnings.push_back(msg.str());
    log_warning(msg.str());
  }
  return res;
}

std::vector<std::size_t> sir_indices(const Vec& log_weights, std::size_t n_out, Rng& rng) {
  double m = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < log_weights.size(); ++i)
    if (!std::isnan(log_weights[i])) m = std::max(m, log_weights[i]);
  if (!std::isfinite(m)) throw std::runtime_error("degenerate importance weights");
  std::vector<double> w(static_cast<std::size_t>(log_weights.size()));
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double lw = log_weights[static_cast<Eigen::Index>(i)];
    w[i] = std::isnan(lw) ? 0.0 : std::exp(lw - m);
  }
  std::discrete_distribution<std::size_t> dist(w.begin(), w.end());
  std::vector<std::size_t> out(n_out);
  for (auto& idx : out) idx = dist(rng);
  return out;
}

Mat sir_resample(const Mat& samples, const Vec& log_weights, std::size_t n_out, Rng& rng) {
  if (samples.rows() != log_weights.size()) throw std::invalid_argument("sir: sample and weight counts differ");
  const auto idx = sir_indices(log_weights, n_out, rng);
  Mat out(static_cast<Eigen::Index>(n_out), samples.cols());
  for (std::size_t i = 0; i < n_out; ++i) out.row(static_cast<Eigen::Index>(i)) = samples.row(static_cast<Eigen::Index>(idx[i]));
  return out;
}

}  // namespace nsbi
