#include "nsbi/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <thread>

#include "nsbi/metrics/transport.hpp"

namespace nsbi {

namespace {

void check_pair(const SampleSet& a, const SampleSet& b) {
  if (a.cols() != b.cols()) {
    throw std::invalid_argument("sample dimensions differ: " + std::to_string(a.cols()) + " vs " +
                                std::to_string(b.cols()));
  }
  if (a.rows() == 0 || b.rows() == 0) throw std::invalid_argument("empty sample set");
  if (!a.allFinite() || !b.allFinite()) throw std::invalid_argument("sample set contains non-finite values");
}

}  // namespace

Mat cost_matrix(const SampleSet& a, const SampleSet& b, double p, std::size_t threads) {
  check_pair(a, b);
  Mat c(a.rows(), b.rows());
  auto fill_rows = [&](Eigen::Index begin, Eigen::Index end) {
    for (Eigen::Index i = begin; i < end; ++i) {
      for (Eigen::Index j = 0; j < b.rows(); ++j) {
        const double d2 = (a.row(i) - b.row(j)).squaredNorm();
        c(i, j) = p == 2.0 ? d2 : std::pow(std::sqrt(d2), p);
      }
    }
  };
  threads = std::max<std::size_t>(1, std::min<std::size_t>(threads, static_cast<std::size_t>(a.rows())));
  if (threads == 1) {
    fill_rows(0, a.rows());
    return c;
  }
  std::vector<std::thread> pool;
  const Eigen::Index chunk = (a.rows() + static_cast<Eigen::Index>(threads) - 1) / static_cast<Eigen::Index>(threads);
  for (Eigen::Index begin = 0; begin < a.rows(); begin += chunk)
    pool.emplace_back(fill_rows, begin, std::min(a.rows(), begin + chunk));
  for (auto& t : pool) t.join();
  return c;
}

WassersteinResult wasserstein(const SampleSet& a, const SampleSet& b, double p, std::size_t threads) {
  if (!(p >= 1.0)) throw std::invalid_argument("Wasserstein order p must be >= 1");
  const Mat cost = cost_matrix(a, b, p, threads);
  const auto n = static_cast<std::int64_t>(a.rows());
  const auto m = static_cast<std::int64_t>(b.rows());
  // Each source carries m units and each sink absorbs n, so flows are integers and plan = flow / (n m).
  const TransportSolution sol = solve_transport(cost, std::vector<std::int64_t>(n, m), std::vector<std::int64_t>(m, n));
  WassersteinResult out;
  out.p = p;
  const double total = static_cast<double>(n) * static_cast<double>(m);
  out.plan.resize(n, m);
  for (std::int64_t i = 0; i < n; ++i)
    for (std::int64_t j = 0; j < m; ++j) out.plan(i, j) = static_cast<double>(sol.flow[i * m + j]) / total;
  out.value = std::pow(std::max(0.0, sol.cost / total), 1.0 / p);
  return out;
}

double gaussian_kernel(const Vec& x, const Vec& y, double sigma2) {
  return std::exp(-(x - y).squaredNorm() / (2.0 * sigma2));
}

double mmd_unbiased(const SampleSet& a, const SampleSet& b, double sigma2) {
  check_pair(a, b);
  if (a.rows() < 2 || b.rows() < 2) throw std::invalid_argument("unbiased MMD needs at least 2 samples per set");
  if (!(sigma2 > 0.0)) throw std::invalid_argument("MMD bandwidth must be positive");
  auto within = [&](const SampleSet& s) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < s.rows(); ++i)
      for (Eigen::Index j = i + 1; j < s.rows(); ++j)
        acc += std::exp(-(s.row(i) - s.row(j)).squaredNorm() / (2.0 * sigma2));
    const auto k = static_cast<double>(s.rows());
    return 2.0 * acc / (k * (k - 1.0));
  };
  double cross = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < b.rows(); ++j)
      cross += std::exp(-(a.row(i) - b.row(j)).squaredNorm() / (2.0 * sigma2));
  cross *= 2.0 / (static_cast<double>(a.rows()) * static_cast<double>(b.rows()));
  return within(a) + within(b) - cross;
}

double median_heuristic(const SampleSet& reference) {
  if (reference.rows() < 2) throw std::invalid_argument("median heuristic needs at least 2 samples");
  std::vector<double> d;
  d.reserve(static_cast<std::size_t>(reference.rows() * (reference.rows() - 1) / 2));
  for (Eigen::Index i = 0; i < reference.rows(); ++i)
    for (Eigen::Index j = i + 1; j < reference.rows(); ++j) d.push_back((reference.row(i) - reference.row(j)).squaredNorm());
  const std::size_t mid = d.size() / 2;
  std::nth_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(mid), d.end());
  double med = d[mid];
  if (d.size() % 2 == 0) med = 0.5 * (med + *std::max_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(mid)));
  if (!(med > 0.0)) throw std::domain_error("zero bandwidth: reference samples have median pairwise distance 0");
  return med;
}

nlohmann::json to_json(const MetricReport& r) {
  nlohmann::json j = {{"metric", r.metric}, {"value", r.value}, {"n", r.n}, {"m", r.m}, {"seeds", r.seeds}};
  if (r.metric == "wasserstein") j["p"] = r.p;
  if (r.metric == "mmd") j["bandwidth"] = r.bandwidth;
  return j;
}

MetricReport metric_report_from_json(const nlohmann::json& j) {
  MetricReport r;
  r.metric = j.at("metric").get<std::string>();
  r.value = j.at("value").get<double>();
  r.n = j.at("n").get<std::size_t>();
  r.m = j.at("m").get<std::size_t>();
  r.seeds = j.value("seeds", std::vector<std::uint64_t>{});
  r.p = j.value("p", 0.0);
  r.bandwidth = j.value("bandwidth", 0.0);
  return r;
}

std::vector<MetricReport> score_samples(const SampleSet& reference, const SampleSet& candidate, double p,
                                        std::vector<std::uint64_t> seeds) {
  MetricReport w;
  w.metric = "wasserstein";
  w.p = p;
  w.value = wasserstein(reference, candidate, p).value;
  w.n = static_cast<std::size_t>(reference.rows());
  w.m = static_cast<std::size_t>(candidate.rows());
  w.seeds = seeds;
  MetricReport k;
  k.metric = "mmd";
  k.bandwidth = median_heuristic(reference);
  k.value = mmd_unbiased(reference, candidate, k.bandwidth);
  k.n = w.n;
  k.m = w.m;
  k.seeds = std::move(seeds);
  return {w, k};
}

}  // namespace nsbi
