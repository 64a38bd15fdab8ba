#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "common/oracles.hpp"
#include "common/toy.hpp"
#include "nsbi/sbc/sbc.hpp"

using namespace nsbi;

namespace {

/// Exact or mean-shifted posterior for the conjugate toy with n observations per dimension.
FunctionSampler conjugate_sampler(int n, double noise, double shift_sd = 0.0) {
  const oracle::ConjugateGaussian c{0.0, 1.0, noise, n};
  return FunctionSampler("exact", [c, shift_sd](std::size_t L, const TimeSeries& obs, Rng& rng) {
    const Eigen::Index d = obs.dim();
    Mat out(static_cast<Eigen::Index>(L), d);
    const double sd = std::sqrt(c.post_var());
    for (Eigen::Index k = 0; k < d; ++k) {
      const double m = c.post_mean(obs.data.col(k).mean()) + shift_sd * sd;
      for (Eigen::Index i = 0; i < out.rows(); ++i) out(i, k) = m + sd * standard_normal(rng);
    }
    return out;
  });
}

RankHistogram histogram_of(const std::vector<std::size_t>& ranks, std::size_t L, std::size_t bins) {
  std::vector<RankRecord> recs;
  for (std::size_t i = 0; i < ranks.size(); ++i) recs.push_back(RankRecord{i, 0, Vec::Zero(1), {ranks[i]}});
  return make_histogram(recs, 1, L, bins);
}

/// Throws for negative first coordinates.
class Fragile : public Simulator {
 public:
  [[nodiscard]] std::string name() const override { return "fragile"; }
  [[nodiscard]] Eigen::Index theta_dim() const override { return 1; }
  [[nodiscard]] Eigen::Index output_dim() const override { return 1; }
  [[nodiscard]] std::vector<std::string> param_names() const override { return {"theta"}; }
  [[nodiscard]] TimeSeries simulate(const Vec& theta, Rng& rng) const override {
    if (theta[0] < -1.0) throw std::runtime_error("simulator diverged");
    return toy::LinearGaussian(1, 3, 1.0).simulate(theta, rng);
  }
};

}  // namespace

TEST_SUITE("sbc") {
  TEST_CASE("rank statistic examples") {
    Rng rng(1);
    Mat s(4, 1);
    s << 1, 2, 3, 4;
    CHECK(rank_statistic(s, Vec::Constant(1, 2.5), rng)[0] == 2);
    CHECK(rank_statistic(s, Vec::Constant(1, 0.0), rng)[0] == 0);
    CHECK(rank_statistic(s, Vec::Constant(1, 9.0), rng)[0] == 4);
  }

  TEST_CASE("ties are broken uniformly") {
    Rng rng(2);
    const Mat s = Mat::Zero(3, 1);
    std::vector<int> counts(4, 0);
    for (int i = 0; i < 8000; ++i) ++counts[rank_statistic(s, Vec::Zero(1), rng)[0]];
    for (int c : counts) CHECK(std::abs(c - 2000) < 4 * std::sqrt(8000 * 0.25 * 0.75));
  }

  TEST_CASE("rank statistic ignores sample order") {
    Rng rng(3);
    Mat s(30, 3);
    for (Eigen::Index i = 0; i < s.size(); ++i) s.data()[i] = standard_normal(rng);
    const Vec t = Vec::Constant(3, 0.1);
    const auto a = rank_statistic(s, t, rng);
    std::vector<Eigen::Index> perm(30);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    Mat p(30, 3);
    for (Eigen::Index i = 0; i < 30; ++i) p.row(i) = s.row(perm[static_cast<std::size_t>(i)]);
    CHECK(rank_statistic(p, t, rng) == a);
  }

  TEST_CASE("uniform counts give zero statistic") {
    std::vector<std::size_t> ranks;
    for (int rep = 0; rep < 5; ++rep)
      for (std::size_t r = 0; r < 100; ++r) ranks.push_back(r);
    const auto hist = histogram_of(ranks, 99, 20);
    const auto u = uniformity_check(hist);
    CHECK(u[0].chi2 == doctest::Approx(0.0));
    CHECK(u[0].p_value == doctest::Approx(1.0));
    CHECK(u[0].dof == 19);
  }

  TEST_CASE("all mass in one bin") {
    const auto hist = histogram_of(std::vector<std::size_t>(5000, 0), 99, 20);
    const auto u = uniformity_check(hist);
    CHECK(u[0].chi2 == doctest::Approx(19.0 * 250.0 + 4750.0 * 4750.0 / 250.0));
    CHECK(u[0].p_value < 1e-300);
  }

  TEST_CASE("too few expected counts are rejected with a suggestion") {
    const auto hist = histogram_of(std::vector<std::size_t>(40, 3), 99, 20);
    CHECK_THROWS_WITH_AS((void)uniformity_check(hist), doctest::Contains("8"), std::invalid_argument);
  }

  TEST_CASE("bins cover every rank") {
    for (std::size_t L : {19u, 50u, 99u}) {
      std::vector<std::size_t> per_bin(20, 0);
      for (std::size_t r = 0; r <= L; ++r) ++per_bin[rank_bin(r, L, 20)];
      CHECK(rank_bin(0, L, 20) == 0);
      CHECK(rank_bin(L, L, 20) == 19);
      for (std::size_t c : per_bin) CHECK(c >= 1);
    }
  }

  TEST_CASE("chi-square tail probability") {
    CHECK(chi2_survival(0.0, 5) == 1.0);
    CHECK(chi2_survival(2.0, 2) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
  }

  TEST_CASE("p-values of uniform ranks are uniform") {
    Rng rng(4);
    std::vector<double> ps;
    for (int rep = 0; rep < 200; ++rep) {
      std::vector<std::size_t> ranks(500);
      std::uniform_int_distribution<std::size_t> u(0, 50);
      for (auto& r : ranks) r = u(rng);
      ps.push_back(uniformity_check(histogram_of(ranks, 50, 20))[0].p_value);
    }
    const double ks = oracle::ks_uniform(ps);
    MESSAGE("ks distance " << ks);
    CHECK(ks < 0.1);
  }

  TEST_CASE("exact conjugate posterior passes and a shifted one fails") {
    auto prior = toy::standard_normal_prior(2);
    toy::LinearGaussian sim(2, 5, 1.0);
    const SbcConfig cfg{500, 50, 20, 5};
    const SbcResult good = sbc_run(*prior, sim, conjugate_sampler(5, 1.0), cfg);
    REQUIRE(good.records.size() == 500);
    for (const auto& u : good.uniformity) CHECK(u.p_value > 0.01);
    for (const auto& c : good.histogram.counts) {
      std::size_t total = 0;
      for (std::size_t v : c) total += v;
      CHECK(total == 500);
    }
    const SbcResult bad = sbc_run(*prior, sim, conjugate_sampler(5, 1.0, 1.0), cfg);
    for (const auto& u : bad.uniformity) CHECK(u.p_value < 0.01);
    const std::size_t low = bad.histogram.counts[0][0] + bad.histogram.counts[0][1];
    const std::size_t high = bad.histogram.counts[0][18] + bad.histogram.counts[0][19];
    CHECK(low > high);
  }

  TEST_CASE("exact sampler passes in nearly every harness run") {
    auto prior = toy::standard_normal_prior(2);
    toy::LinearGaussian sim(2, 3, 0.5);
    const auto sampler = conjugate_sampler(3, 0.5);
    int passes = 0, total = 0;
    for (std::uint64_t run = 0; run < 20; ++run) {
      const SbcResult res = sbc_run(*prior, sim, sampler, SbcConfig{500, 50, 20, 100 + run});
      for (const auto& u : res.uniformity) {
        passes += u.p_value > 0.01;
        ++total;
      }
    }
    CHECK(passes >= 0.95 * total);
  }

  TEST_CASE("failed replicates are skipped") {
    auto prior = toy::standard_normal_prior(1);
    Fragile sim;
    const SbcResult res = sbc_run(*prior, sim, conjugate_sampler(3, 1.0), SbcConfig{300, 20, 7, 6});
    CHECK_FALSE(res.skipped.empty());
    CHECK(res.records.size() + res.skipped.size() == 300);
    CHECK(res.histogram.total == res.records.size());
  }

  TEST_CASE("simulation-based samplers are refused with a cost estimate") {
    auto prior = toy::standard_normal_prior(1);
    toy::LinearGaussian sim(1, 3, 1.0);
    const FunctionSampler pm("kde", [](std::size_t L, const TimeSeries&, Rng&) { return Mat::Zero(static_cast<Eigen::Index>(L), 1); },
                             100000);
    CHECK_THROWS_WITH_AS((void)sbc_run(*prior, sim, pm, SbcConfig{500, 100, 20, 0}), doctest::Contains("5e+07"),
                         std::invalid_argument);
  }

  TEST_CASE("rank and histogram outputs") {
    auto prior = toy::standard_normal_prior(2);
    toy::LinearGaussian sim(2, 3, 1.0);
    const SbcResult res = sbc_run(*prior, sim, conjugate_sampler(3, 1.0), SbcConfig{100, 19, 20, 7});
    const std::string csv = ranks_csv(res.records);
    CHECK(csv.rfind("replicate,dimension,rank\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 201);
    const auto j = histogram_json(res.histogram, res.uniformity);
    CHECK(j["dimensions"].size() == 2);
    CHECK(j["band_lower"].size() == 20);
    for (std::size_t b = 0; b < 20; ++b) CHECK(j["band_lower"][b].get<double>() <= j["expected"][b].get<double>());
  }
}
