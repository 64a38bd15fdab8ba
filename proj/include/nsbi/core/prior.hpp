#pragma once

#include <memory>

#include "nsbi/core/rng.hpp"
#include "nsbi/core/types.hpp"

namespace nsbi {

class Prior {
 public:
  virtual ~Prior() = default;
  [[nodiscard]] virtual Eigen::Index dim() const = 0;
  [[nodiscard]] virtual double log_prob(const Vec& theta) const = 0;
  [[nodiscard]] virtual bool in_support(const Vec& theta) const = 0;
  [[nodiscard]] virtual Vec sample(Rng& rng) const = 0;
  [[nodiscard]] virtual Vec mean() const = 0;
  [[nodiscard]] virtual Vec stddev() const = 0;

  [[nodiscard]] Mat sample_n(std::size_t n, Rng& rng) const;
};

/// Independent uniform on the box [lower, upper].
class BoxUniform : public Prior {
 public:
  BoxUniform(Vec lower, Vec upper);

  [[nodiscard]] Eigen::Index dim() const override { return lower_.size(); }
  [[nodiscard]] double log_prob(const Vec& theta) const override;
  [[nodiscard]] bool in_support(const Vec& theta) const override;
  [[nodiscard]] Vec sample(Rng& rng) const override;
  [[nodiscard]] Vec mean() const override;
  [[nodiscard]] Vec stddev() const override;

  [[nodiscard]] const Vec& lower() const { return lower_; }
  [[nodiscard]] const Vec& upper() const { return upper_; }

 private:
  Vec lower_;
  Vec upper_;
  double log_density_ = 0.0;
};

/// Independent normal with diagonal covariance; used for conjugate toy problems.
class DiagGaussianPrior : public Prior {
 public:
  DiagGaussianPrior(Vec mean, Vec sd);

  [[nodiscard]] Eigen::Index dim() const override { return mean_.size(); }
  [[nodiscard]] double log_prob(const Vec& theta) const override;
  [[nodiscard]] bool in_support(const Vec&) const override { return true; }
  [[nodiscard]] Vec sample(Rng& rng) const override;
  [[nodiscard]] Vec mean() const override { return mean_; }
  [[nodiscard]] Vec stddev() const override { return sd_; }

 private:
  Vec mean_;
  Vec sd_;
};

}  // namespace nsbi
