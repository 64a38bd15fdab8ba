#include "nsbi/summaries/naive.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace nsbi {

double quantile_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) throw std::invalid_argument("quantile of an empty series");
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

double lagged_autocorrelation(const Eigen::Ref<const Vec>& series, Eigen::Index lag) {
  const Eigen::Index m = series.size() - lag;
  if (m < 2) return 0.0;
  const auto a = series.head(m).array();
  const auto b = series.tail(m).array();
  const double ma = a.mean(), mb = b.mean();
  const double saa = (a - ma).square().sum();
  const double sbb = (b - mb).square().sum();
  if (saa <= 0.0 || sbb <= 0.0) return 0.0;
  return ((a - ma) * (b - mb)).sum() / std::sqrt(saa * sbb);
}

Vec naive_summaries(const Eigen::Ref<const Vec>& x) {
  const Eigen::Index n = x.size();
  if (n < 2) throw std::invalid_argument("naive summaries need at least 2 points");
  Vec s(kNaiveStatsPerDim);
  const double mean = x.mean();
  const double var = (x.array() - mean).square().sum() / static_cast<double>(n - 1);
  std::vector<double> sorted(x.data(), x.data() + n);
  std::sort(sorted.begin(), sorted.end());
  s[0] = mean;
  s[1] = var;
  s[2] = sorted.back();
  s[3] = sorted.front();
  s[4] = quantile_sorted(sorted, 0.5);
  s[5] = quantile_sorted(sorted, 0.25);
  s[6] = quantile_sorted(sorted, 0.75);
  for (Eigen::Index k = 1; k <= 3; ++k) s[6 + k] = var > 0.0 ? lagged_autocorrelation(x, k) : 0.0;
  return s;
}

Vec naive_summaries(const TimeSeries& x) {
  Vec out(kNaiveStatsPerDim * x.dim());
  for (Eigen::Index j = 0; j < x.dim(); ++j) {
    const Vec col = x.data.col(j);
    out.segment(j * kNaiveStatsPerDim, kNaiveStatsPerDim) = naive_summaries(col);
  }
  return out;
}

}  // namespace nsbi
