#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "nsbi/core/types.hpp"

namespace nsbi {

struct WassersteinResult {
  double value = 0.0;
  double p = 2.0;
  /// n x m coupling with rows summing to 1/n and columns to 1/m.
  Mat plan;
};

/// Pairwise Euclidean distances raised to the power p.
Mat cost_matrix(const SampleSet& a, const SampleSet& b, double p, std::size_t threads = 1);

/// Exact W_p between the empirical measures of the rows of a and b.
WassersteinResult wasserstein(const SampleSet& a, const SampleSet& b, double p = 2.0, std::size_t threads = 1);

/// exp(-||x - y||^2 / (2 sigma2))
double gaussian_kernel(const Vec& x, const Vec& y, double sigma2);

double mmd_unbiased(const SampleSet& a, const SampleSet& b, double sigma2);

/// Median of pairwise squared distances within the reference set.
double median_heuristic(const SampleSet& reference);

struct MetricReport {
  std::string metric;
  double value = 0.0;
  double p = 0.0;
  double bandwidth = 0.0;
  std::size_t n = 0;
  std::size_t m = 0;
  std::vector<std::uint64_t> seeds;
};

nlohmann::json to_json(const MetricReport& r);
MetricReport metric_report_from_json(const nlohmann::json& j);

/// Both metrics against the reference set, with the MMD bandwidth taken from the reference.
std::vector<MetricReport> score_samples(const SampleSet& reference, const SampleSet& candidate, double p = 2.0,
                                        std::vector<std::uint64_t> seeds = {});

}  // namespace nsbi
