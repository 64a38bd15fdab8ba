#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/LU>

#include "common/oracles.hpp"
#include "common/toy.hpp"
#include "nsbi/diffcore/eigen_bridge.hpp"
#include "nsbi/flows/maf.hpp"
#include "nsbi/flows/npe.hpp"
#include "nsbi/io/blob.hpp"
#include "nsbi/metrics/metrics.hpp"

using namespace nsbi;
using nsbi::diff::Var;

namespace {

struct FlowFixture {
  diff::ParamStore store;
  MaskedAutoregressiveFlow flow;

  FlowFixture(std::size_t dim, std::size_t context_dim, std::uint64_t seed, double out_scale = 1.0) {
    Rng rng(seed);
    flow = MaskedAutoregressiveFlow(MafConfig{dim, context_dim, 5, 20, 2, 7.0}, store, rng);
    // Larger output weights make every transform visibly non-trivial.
    for (const auto& name : store.names()) {
      if (name.find("output") == std::string::npos) continue;
      diff::Tensor t = store.get(name).value();
      for (auto& v : t.storage()) v = out_scale * standard_normal(rng) * 0.3;
      store.set_value(name, t);
    }
  }

  [[nodiscard]] Var ctx(const Mat& c) const { return c.size() ? diff::constant(diff::from_matrix(c)) : Var(); }

  [[nodiscard]] Mat forward(const Mat& x, const Mat& c) const {
    diff::NoGradGuard g;
    return diff::to_matrix(flow.to_base(diff::constant(diff::from_matrix(x)), ctx(c)).u.value());
  }

  [[nodiscard]] double log_prob(const Mat& x, const Mat& c) const {
    diff::NoGradGuard g;
    return flow.log_prob(diff::constant(diff::from_matrix(x)), ctx(c)).value()[0];
  }
};

double std_normal_logpdf(const Vec& u) {
  return -0.5 * u.squaredNorm() - 0.5 * static_cast<double>(u.size()) * std::log(2.0 * std::numbers::pi);
}

NpeConfig small_npe(EmbeddingKind kind) {
  NpeConfig cfg;
  cfg.embedding.kind = kind;
  cfg.transforms = 3;
  cfg.hidden = 20;
  cfg.train.max_epochs = 200;
  cfg.train.lr = 2e-3;
  cfg.train.patience = 10;
  return cfg;
}

TrainSet simulate_set(const Simulator& sim, const Prior& prior, const NeuralPosteriorEstimator& npe, std::size_t n,
                      std::uint64_t seed) {
  Rng rng(seed);
  const Mat theta = prior.sample_n(n, rng);
  TrainSet data;
  data.append(theta, npe.features(simulate_batch(sim, theta, seed + 1)), 0);
  return data;
}

}  // namespace

TEST_SUITE("flows") {
  TEST_CASE("identity flow evaluates the base density") {
    FlowFixture f(1, 0, 1);
    f.flow.zero_output_layers();
    CHECK(f.log_prob(Mat::Zero(1, 1), Mat()) == doctest::Approx(-0.5 * std::log(2.0 * std::numbers::pi)).epsilon(1e-12));
    CHECK(f.log_prob(Mat::Zero(1, 1), Mat()) == doctest::Approx(-0.9189).epsilon(1e-4));
  }

  TEST_CASE("one-dimensional density integrates to one") {
    for (std::uint64_t seed : {2, 3, 4}) {
      FlowFixture f(1, 2, seed);
      Mat c(1, 2);
      c << 0.3, -1.2;
      const int n = 20001;
      Mat grid(n, 1);
      for (int i = 0; i < n; ++i) grid(i, 0) = -10.0 + 20.0 * i / (n - 1);
      diff::NoGradGuard g;
      const auto lp = f.flow.log_prob(diff::constant(diff::from_matrix(grid)), f.ctx(c.replicate(n, 1)));
      double integral = 0.0;
      for (int i = 0; i < n; ++i) integral += std::exp(lp.value()[i]) * (i == 0 || i == n - 1 ? 0.5 : 1.0);
      integral *= 20.0 / (n - 1);
      MESSAGE("integral " << integral);
      CHECK(integral >= 0.99);
      CHECK(integral <= 1.01);
    }
  }

  TEST_CASE("log density matches base density plus numerical log-Jacobian") {
    const Eigen::Index d = 3;
    FlowFixture f(d, 2, 5);
    Rng rng(6);
    double worst = 0.0;
    for (int rep = 0; rep < 20; ++rep) {
      Mat x(1, d), c(1, 2);
      for (Eigen::Index j = 0; j < d; ++j) x(0, j) = standard_normal(rng);
      c << standard_normal(rng), standard_normal(rng);
      // Fourth-order central differences for the Jacobian of x -> u.
      const double h = 1e-3;
      Mat J(d, d);
      for (Eigen::Index j = 0; j < d; ++j) {
        auto at = [&](double delta) {
          Mat y = x;
          y(0, j) += delta;
          return Vec(f.forward(y, c).row(0).transpose());
        };
        J.col(j) = (-at(2 * h) + 8 * at(h) - 8 * at(-h) + at(-2 * h)) / (12 * h);
      }
      const Vec u = f.forward(x, c).row(0).transpose();
      const double expected = std_normal_logpdf(u) + std::log(std::abs(J.determinant()));
      const double got = f.log_prob(x, c);
      worst = std::max(worst, std::abs(std::exp(got) - std::exp(expected)) / std::exp(expected));
    }
    MESSAGE("worst relative density error " << worst);
    CHECK(worst < 1e-8);
  }

  TEST_CASE("log density is base density plus reported log-determinant") {
    FlowFixture f(2, 1, 7);
    Rng rng(8);
    Mat x(16, 2), c(16, 1);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = 2.0 * standard_normal(rng);
    for (Eigen::Index i = 0; i < c.size(); ++i) c.data()[i] = standard_normal(rng);
    diff::NoGradGuard g;
    const auto tb = f.flow.to_base(diff::constant(diff::from_matrix(x)), f.ctx(c));
    const auto lp = f.flow.log_prob(diff::constant(diff::from_matrix(x)), f.ctx(c));
    const Mat u = diff::to_matrix(tb.u.value());
    REQUIRE(tb.per_transform_logdet.size() == 5);
    for (Eigen::Index i = 0; i < 16; ++i) {
      double sum = 0.0;
      for (const auto& ld : tb.per_transform_logdet) sum += ld.value()[static_cast<std::size_t>(i)];
      CHECK(std::abs(sum - tb.logdet.value()[static_cast<std::size_t>(i)]) < 1e-12);
      const double expected = std_normal_logpdf(u.row(i).transpose()) + tb.logdet.value()[static_cast<std::size_t>(i)];
      CHECK(std::abs(lp.value()[static_cast<std::size_t>(i)] - expected) < 1e-10);
    }
  }

  TEST_CASE("inverse and forward compose to the identity") {
    for (double scale : {1.0, 3.0}) {
      FlowFixture f(4, 3, 9, scale);
      Rng rng(10);
      Mat u(1000, 4), c(1000, 3);
      for (Eigen::Index i = 0; i < u.size(); ++i) u.data()[i] = standard_normal(rng);
      for (Eigen::Index i = 0; i < c.size(); ++i) c.data()[i] = standard_normal(rng);
      const Mat x = f.flow.from_base(u, c);
      const double err = (f.forward(x, c) - u).cwiseAbs().maxCoeff();
      MESSAGE("max round-trip error " << err);
      CHECK(err < 1e-5);
    }
  }

  TEST_CASE("identity flow samples are standard normal") {
    FlowFixture f(2, 0, 11);
    f.flow.zero_output_layers();
    Rng rng(12);
    const std::size_t n = 10000;
    const Mat s = f.flow.sample(n, Vec(), rng);
    for (Eigen::Index j = 0; j < 2; ++j) {
      CHECK(std::abs(s.col(j).mean()) < 4.0 / std::sqrt(static_cast<double>(n)));
      const double var = (s.col(j).array() - s.col(j).mean()).square().mean();
      CHECK(std::abs(var - 1.0) < 0.05);
    }
  }

  TEST_CASE("non-finite log-scale names the transform") {
    FlowFixture f(2, 0, 13);
    Mat x(1, 2);
    x << std::numeric_limits<double>::quiet_NaN(), 0.0;
    CHECK_THROWS_WITH_AS((void)f.forward(x, Mat()), doctest::Contains("transform"), std::runtime_error);
  }

  TEST_CASE("unconditional flow learns a shifted normal") {
    diff::ParamStore store;
    Rng rng(14);
    MaskedAutoregressiveFlow flow(MafConfig{1, 0, 3, 20, 2, 7.0}, store, rng);
    Mat data(2000, 1);
    for (Eigen::Index i = 0; i < data.rows(); ++i) data(i, 0) = 2.0 + standard_normal(rng);
    diff::TrainConfig tc;
    tc.lr = 5e-3;
    tc.max_epochs = 100;
    tc.patience = 10;
    const auto report = diff::train_early_stopping(
        store, 2000,
        [&](const std::vector<std::size_t>& items, Rng&) {
          std::vector<std::size_t> rows(items.begin(), items.end());
          const Var x = diff::take_rows(diff::constant(diff::from_matrix(data)), rows);
          return diff::scale(diff::mean(flow.log_prob(x, Var())), -1.0);
        },
        tc, rng);
    for (double v : report.validation_loss) CHECK(std::isfinite(v));
    const Mat s = flow.sample(10000, Vec(), rng);
    MESSAGE("sample mean " << s.mean());
    CHECK(s.mean() >= 1.8);
    CHECK(s.mean() <= 2.2);
  }

  TEST_CASE("conjugate posterior mean") {
    auto prior = toy::standard_normal_prior(1);
    toy::LinearGaussian sim(1, 1, 1.0);
    NeuralPosteriorEstimator npe(small_npe(EmbeddingKind::kIdentity), prior, 1, 1, 15);
    const TrainSet data = simulate_set(sim, *prior, npe, 3000, 16);
    Rng rng(17);
    const auto report = npe.train(data, false, rng);
    for (double v : report.validation_loss) CHECK(std::isfinite(v));
    const Mat s = npe.sample(5000, npe.features(toy::constant_series(1, Vec::Constant(1, 2.0))), rng);
    const oracle::ConjugateGaussian exact{0.0, 1.0, 1.0, 1};
    MESSAGE("posterior mean " << s.mean() << " analytic " << exact.post_mean(2.0));
    CHECK(s.mean() >= 0.8);
    CHECK(s.mean() <= 1.2);
  }

  TEST_CASE("uninformative data gives the same conditional everywhere") {
    auto prior = toy::standard_normal_prior(1);
    toy::LinearGaussian sim(1, 1, 1.0, false);
    NeuralPosteriorEstimator npe(small_npe(EmbeddingKind::kIdentity), prior, 1, 1, 18);
    const TrainSet data = simulate_set(sim, *prior, npe, 3000, 19);
    Rng rng(20);
    (void)npe.train(data, false, rng);
    const Mat a = npe.sample(1000, Vec::Constant(1, -1.0), rng);
    const Mat b = npe.sample(1000, Vec::Constant(1, 1.0), rng);
    const double mmd = mmd_unbiased(a, b, median_heuristic(a));
    MESSAGE("mmd " << mmd);
    CHECK(mmd < 0.05);
  }

  TEST_CASE("blob round trip is bit exact") {
    auto prior = toy::standard_normal_prior(2);
    toy::LinearGaussian sim(2, 5, 1.0);
    NpeConfig cfg = small_npe(EmbeddingKind::kGru);
    cfg.embedding.hidden = 4;
    cfg.embedding.output = 3;
    cfg.train.max_epochs = 2;
    NeuralPosteriorEstimator npe(cfg, prior, 2, 5, 21);
    const TrainSet data = simulate_set(sim, *prior, npe, 100, 22);
    Rng rng(23);
    (void)npe.train(data, false, rng);
    const Blob blob = decode_blob(encode_blob(npe.to_blob()));
    const auto loaded = NeuralPosteriorEstimator::from_blob(blob, prior);
    const Vec feat = npe.features(sim.simulate(Vec::Zero(2), rng));
    const Mat thetas = prior->sample_n(10, rng);
    CHECK((npe.log_prob(thetas, feat) - loaded->log_prob(thetas, feat)).cwiseAbs().maxCoeff() == 0.0);
    Rng r1(24), r2(24);
    CHECK(npe.sample(20, feat, r1) == loaded->sample(20, feat, r2));
    CHECK(encode_blob(loaded->to_blob()) == encode_blob(npe.to_blob()));
  }

  TEST_CASE("a single round equals amortized training") {
    auto prior = toy::standard_normal_prior(1);
    toy::LinearGaussian sim(1, 3, 1.0);
    NpeConfig cfg = small_npe(EmbeddingKind::kIdentity);
    cfg.train.max_epochs = 5;
    const std::uint64_t seed = 25;
    NeuralPosteriorEstimator a(cfg, prior, 1, 3, 26);
    NeuralPosteriorEstimator b(cfg, prior, 1, 3, 26);
    const TimeSeries obs = toy::constant_series(3, Vec::Constant(1, 0.5));
    const auto res = snpe_rounds(a, sim, obs, RoundSettings{1, 200, 1}, seed);
    CHECK(res.simulations == 200);
    Rng proposal(derive_seed(seed, 1)), train(derive_seed(seed, 2));
    const Mat theta = prior->sample_n(200, proposal);
    TrainSet data;
    data.append(theta, b.features(simulate_batch(sim, theta, derive_seed(seed, 3))), 0);
    (void)b.train(data, false, train);
    CHECK(res.proposals[0] == theta);
    const Mat probe = prior->sample_n(10, proposal);
    const Vec f = a.features(obs);
    CHECK((a.log_prob(probe, f) - b.log_prob(probe, f)).cwiseAbs().maxCoeff() == 0.0);
  }

  TEST_CASE("second round is no worse than the first on the conjugate toy") {
    auto prior = toy::standard_normal_prior(1);
    toy::LinearGaussian sim(1, 1, 0.3);
    const TimeSeries obs = toy::constant_series(1, Vec::Constant(1, 1.5));
    const oracle::ConjugateGaussian exact{0.0, 1.0, 0.3, 1};
    Rng ref_rng(27);
    Mat reference(1000, 1);
    for (Eigen::Index i = 0; i < 1000; ++i)
      reference(i, 0) = exact.post_mean(1.5) + std::sqrt(exact.post_var()) * standard_normal(ref_rng);
    const double bw = median_heuristic(reference);
    std::vector<double> diff1, diff2;
    for (std::uint64_t s = 0; s < 5; ++s) {
      double mmd[2];
      for (std::size_t rounds : {1u, 2u}) {
        NeuralPosteriorEstimator npe(small_npe(EmbeddingKind::kIdentity), prior, 1, 1, 100 + s);
        (void)snpe_rounds(npe, sim, obs, RoundSettings{rounds, 500, 1}, 200 + s);
        Rng rng(300 + s);
        mmd[rounds - 1] = mmd_unbiased(npe.sample(1000, npe.features(obs), rng), reference, bw);
      }
      diff1.push_back(mmd[0]);
      diff2.push_back(mmd[1]);
    }
    std::sort(diff1.begin(), diff1.end());
    std::sort(diff2.begin(), diff2.end());
    MESSAGE("median mmd round 1 " << diff1[2] << " round 2 " << diff2[2]);
    CHECK(diff2[2] <= diff1[2]);
  }
}
