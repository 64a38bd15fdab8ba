#include "nsbi/sbc/sbc.hpp"

#include <algorithm>
#include <boost/math/distributions/binomial.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "nsbi/core/log.hpp"
#include "nsbi/flows/npe.hpp"
#include "nsbi/ratio/nre.hpp"

namespace nsbi {

Mat FlowSampler::sample(std::size_t L, const TimeSeries& obs, Rng& rng) const {
  return npe_->sample(L, npe_->features(obs), rng);
}

Mat RatioSirSampler::sample(std::size_t L, const TimeSeries& obs, Rng& rng) const {
  return nre_->sample_sir(L, L * proposals_per_sample_, nre_->features(obs), rng);
}

std::vector<std::size_t> rank_statistic(const Mat& samples, const Vec& theta_tilde, Rng& rng) {
  if (samples.rows() == 0) throw std::invalid_argument("rank statistic needs at least one posterior sample");
  if (samples.cols() != theta_tilde.size()) throw std::invalid_argument("posterior sample and parameter dimensions differ");
  std::vector<std::size_t> ranks(static_cast<std::size_t>(samples.cols()), 0);
  for (Eigen::Index k = 0; k < samples.cols(); ++k) {
    std::size_t below = 0;
    std::size_t ties = 0;
    for (Eigen::Index i = 0; i < samples.rows(); ++i) {
      if (samples(i, k) < theta_tilde(k)) {
        ++below;
      } else if (samples(i, k) == theta_tilde(k)) {
        ++ties;
      }
    }
    if (ties > 0) {
      // theta_tilde lands uniformly among the tied block.
      below += std::uniform_int_distribution<std::size_t>(0, ties)(rng);
    }
    ranks[static_cast<std::size_t>(k)] = below;
  }
  return ranks;
}

std::size_t rank_bin(std::size_t rank, std::size_t L, std::size_t bins) { return rank * bins / (L + 1); }

std::vector<double> RankHistogram::max_deviation() const {
  std::vector<double> out;
  for (const auto& c : counts) {
    double m = 0.0;
    for (std::size_t b = 0; b < bins; ++b) m = std::max(m, std::abs(static_cast<double>(c[b]) - expected[b]));
    out.push_back(m);
  }
  return out;
}

RankHistogram make_histogram(const std::vector<RankRecord>& records, std::size_t dim, std::size_t L, std::size_t bins) {
  if (bins == 0 || bins > L + 1) {
    throw std::invalid_argument("bin count must be between 1 and L + 1 = " + std::to_string(L + 1));
  }
  RankHistogram h;
  h.L = L;
  h.bins = bins;
  h.total = records.size();
  h.counts.assign(dim, std::vector<std::size_t>(bins, 0));
  for (const auto& r : records) {
    for (std::size_t k = 0; k < dim; ++k) {
      if (r.ranks[k] > L) throw std::invalid_argument("rank exceeds L");
      ++h.counts[k][rank_bin(r.ranks[k], L, bins)];
    }
  }
  std::vector<std::size_t> width(bins, 0);
  for (std::size_t r = 0; r <= L; ++r) ++width[rank_bin(r, L, bins)];
  for (std::size_t b = 0; b < bins; ++b) {
    const double prob = static_cast<double>(width[b]) / static_cast<double>(L + 1);
    h.expected.push_back(prob * static_cast<double>(h.total));
    if (h.total == 0) {
      h.band_lower.push_back(0.0);
      h.band_upper.push_back(0.0);
      continue;
    }
    const boost::math::binomial_distribution<double> dist(static_cast<double>(h.total), prob);
    h.band_lower.push_back(boost::math::quantile(dist, 0.005));
    h.band_upper.push_back(boost::math::quantile(dist, 0.995));
  }
  return h;
}

double chi2_survival(double chi2, double dof) {
  if (chi2 <= 0.0) return 1.0;
  return boost::math::gamma_q(dof / 2.0, chi2 / 2.0);
}

std::vector<UniformityResult> uniformity_check(const RankHistogram& hist) {
  const double min_expected = *std::min_element(hist.expected.begin(), hist.expected.end());
  if (min_expected < 5.0) {
    const std::size_t suggested = std::max<std::size_t>(1, std::min(hist.total / 5, hist.L + 1));
    std::ostringstream msg;
    msg << "chi-square test needs an expected count of at least 5 per bin (smallest is " << min_expected << " with "
        << hist.bins << " bins over " << hist.total << " replicates); use at most " << suggested << " bins";
    throw std::invalid_argument(msg.str());
  }
  std::vector<UniformityResult> out;
  for (const auto& c : hist.counts) {
    UniformityResult u;
    for (std::size_t b = 0; b < hist.bins; ++b) {
      const double diff = static_cast<double>(c[b]) - hist.expected[b];
      u.chi2 += diff * diff / hist.expected[b];
    }
    u.dof = hist.bins - 1;
    u.p_value = chi2_survival(u.chi2, static_cast<double>(u.dof));
    out.push_back(u);
  }
  return out;
}

SbcResult sbc_run(const Prior& prior, const Simulator& sim, const PosteriorSampler& sampler, const SbcConfig& cfg) {
  if (cfg.L == 0) throw std::invalid_argument("L must be >= 1");
  if (cfg.replicates == 0) throw std::invalid_argument("replicate count must be >= 1");
  if (const std::size_t per = sampler.simulations_per_posterior(); per > 0) {
    std::ostringstream msg;
    msg << "SBC with the '" << sampler.method() << "' sampler needs a fresh inference per replicate: " << cfg.replicates
        << " replicates x " << per << " simulations = " << static_cast<double>(cfg.replicates) * static_cast<double>(per)
        << " simulator calls; refusing";
    throw std::invalid_argument(msg.str());
  }
  SbcResult out;
  for (std::size_t p = 0; p < cfg.replicates; ++p) {
    RankRecord rec;
    rec.replicate = p;
    rec.seed = derive_seed(cfg.seed, p);
    Rng rng(rec.seed);
    try {
      rec.theta_tilde = prior.sample(rng);
      const TimeSeries y = sim.simulate(rec.theta_tilde, rng);
      const Mat draws = sampler.sample(cfg.L, y, rng);
      if (static_cast<std::size_t>(draws.rows()) != cfg.L) throw std::runtime_error("sampler returned the wrong number of draws");
      rec.ranks = rank_statistic(draws, rec.theta_tilde, rng);
    } catch (const std::exception& e) {
      const std::string why = "replicate " + std::to_string(p) + " skipped: " + e.what();
      log_warning(why);
      out.skipped.push_back(why);
      continue;
    }
    out.records.push_back(std::move(rec));
  }
  out.histogram = make_histogram(out.records, prior.dim(), cfg.L, cfg.bins);
  out.uniformity = uniformity_check(out.histogram);
  return out;
}

std::string ranks_csv(const std::vector<RankRecord>& records) {
  std::ostringstream s;
  s << "replicate,dimension,rank\n";
  for (const auto& r : records)
    for (std::size_t k = 0; k < r.ranks.size(); ++k) s << r.replicate << ',' << k << ',' << r.ranks[k] << '\n';
  return s.str();
}

nlohmann::json histogram_json(const RankHistogram& hist, const std::vector<UniformityResult>& uniformity) {
  nlohmann::json j;
  j["L"] = hist.L;
  j["bins"] = hist.bins;
  j["replicates"] = hist.total;
  j["expected"] = hist.expected;
  j["band_lower"] = hist.band_lower;
  j["band_upper"] = hist.band_upper;
  const auto dev = hist.max_deviation();
  nlohmann::json dims = nlohmann::json::array();
  for (std::size_t k = 0; k < hist.counts.size(); ++k) {
    nlohmann::json d = {{"dimension", k}, {"counts", hist.counts[k]}, {"max_deviation", dev[k]}};
    if (k < uniformity.size()) {
      d["chi2"] = uniformity[k].chi2;
      d["p_value"] = uniformity[k].p_value;
      d["dof"] = uniformity[k].dof;
    }
    dims.push_back(d);
  }
  j["dimensions"] = dims;
  return j;
}

}  // namespace nsbi
