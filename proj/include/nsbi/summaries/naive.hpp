#pragma once

#include "nsbi/core/types.hpp"

namespace nsbi {

inline constexpr Eigen::Index kNaiveStatsPerDim = 10;

/// Mean, unbiased variance, max, min, median, 25% and 75% quantiles, and lag 1-3 autocorrelations
/// of each column, concatenated column by column.
Vec naive_summaries(const TimeSeries& x);
Vec naive_summaries(const Eigen::Ref<const Vec>& series);

/// Quantile with linear interpolation between order statistics; `sorted` must be ascending.
double quantile_sorted(const std::vector<double>& sorted, double q);

/// Pearson correlation between x[0..n-k) and x[k..n); zero when either segment is constant.
double lagged_autocorrelation(const Eigen::Ref<const Vec>& series, Eigen::Index lag);

}  // namespace nsbi
