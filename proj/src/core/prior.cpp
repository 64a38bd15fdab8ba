#include "nsbi/core/prior.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace nsbi {

Mat Prior::sample_n(std::size_t n, Rng& rng) const {
  Mat out(static_cast<Eigen::Index>(n), dim());
  for (Eigen::Index i = 0; i < out.rows(); ++i) out.row(i) = sample(rng).transpose();
  return out;
}

BoxUniform::BoxUniform(Vec lower, Vec upper) : lower_(std::move(lower)), upper_(std::move(upper)) {
  if (lower_.size() != upper_.size() || lower_.size() == 0) {
    throw std::invalid_argument("prior bounds must be nonempty and of equal length");
  }
  for (Eigen::Index i = 0; i < lower_.size(); ++i) {
    if (!(lower_[i] < upper_[i])) {
      throw std::invalid_argument("prior bound " + std::to_string(i) + ": lower must be < upper");
    }
    log_density_ -= std::log(upper_[i] - lower_[i]);
  }
}

bool BoxUniform::in_support(const Vec& theta) const {
  if (theta.size() != lower_.size()) return false;
  for (Eigen::Index i = 0; i < theta.size(); ++i)
    if (!(theta[i] >= lower_[i] && theta[i] <= upper_[i])) return false;
  return true;
}

double BoxUniform::log_prob(const Vec& theta) const {
  return in_support(theta) ? log_density_ : -std::numeric_limits<double>::infinity();
}

Vec BoxUniform::sample(Rng& rng) const {
  Vec out(lower_.size());
  for (Eigen::Index i = 0; i < out.size(); ++i) out[i] = lower_[i] + (upper_[i] - lower_[i]) * uniform01(rng);
  return out;
}

Vec BoxUniform::mean() const { return 0.5 * (lower_ + upper_); }

Vec BoxUniform::stddev() const { return (upper_ - lower_) / std::sqrt(12.0); }

DiagGaussianPrior::DiagGaussianPrior(Vec mean, Vec sd) : mean_(std::move(mean)), sd_(std::move(sd)) {
  if (mean_.size() != sd_.size() || (sd_.array() <= 0.0).any()) {
    throw std::invalid_argument("gaussian prior needs matching sizes and positive sd");
  }
}

double DiagGaussianPrior::log_prob(const Vec& theta) const {
  const Vec z = (theta - mean_).cwiseQuotient(sd_);
  return -0.5 * z.squaredNorm() - sd_.array().log().sum() -
         0.5 * static_cast<double>(mean_.size()) * std::log(2.0 * std::numbers::pi);
}

Vec DiagGaussianPrior::sample(Rng& rng) const {
  Vec out(mean_.size());
  for (Eigen::Index i = 0; i < out.size(); ++i) out[i] = mean_[i] + sd_[i] * standard_normal(rng);
  return out;
}

}  // namespace nsbi
