#include <doctest.h>

#include <Eigen/Cholesky>
#include <Eigen/LU>
#include <cmath>
#include <numbers>

#include "nsbi/core/prior.hpp"
#include "nsbi/simulators/brock_hommes.hpp"
#include "nsbi/simulators/franke_westerhoff.hpp"
#include "nsbi/simulators/models.hpp"
#include "nsbi/simulators/mvgbm.hpp"

using namespace nsbi;

namespace {

Vec vec(std::initializer_list<double> v) {
  Vec out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

}  // namespace

TEST_SUITE("simulators") {
  TEST_CASE("box uniform prior density and support") {
    BoxUniform p(vec({0, -1}), vec({2, 1}));
    CHECK(p.log_prob(vec({1, 0})) == doctest::Approx(-std::log(4.0)));
    CHECK(std::isinf(p.log_prob(vec({3, 0}))));
    CHECK_THROWS_AS(BoxUniform(vec({0, 1}), vec({1, 1})), std::invalid_argument);
  }

  TEST_CASE("bh series at theta star is finite with zero initial states") {
    const ModelSpec m = make_model("bh1");
    Rng rng(1);
    const TimeSeries x = m.simulator->simulate(m.theta_star, rng);
    CHECK(x.length() == 100);
    CHECK(x.data.allFinite());
    CHECK(x.data(0, 0) == 0.0);
    CHECK(x.data(1, 0) == 0.0);
  }

  TEST_CASE("bh noise-free zero fixed point") {
    BHConfig cfg;
    cfg.sigma_noise = 0.0;
    BrockHommes bh(cfg);
    Rng rng(2);
    CHECK(bh.simulate(vec({0.9, 0.0, 0.9, 0.0}), rng).data.isZero(0.0));
  }

  TEST_CASE("bh transition mean examples") {
    BHConfig cfg;
    // y_t = R y_{t-1} makes every fitness difference zero.
    CHECK(bh_transition_mean({0.0, 1.0, 1.0}, vec({0.9, 0.2, 0.9, -0.2}), cfg) == doctest::Approx(0.7025).epsilon(1e-12));
    CHECK(bh_transition_mean({0.0, 0.0, 0.0}, Vec::Zero(4), cfg) == 0.0);
  }

  TEST_CASE("bh weights are a probability vector") {
    Rng rng(3);
    BHConfig cfg;
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int rep = 0; rep < 200; ++rep) {
      const Vec theta = vec({u(rng), u(rng), u(rng), u(rng)});
      const auto w = bh_weights({u(rng), u(rng), u(rng)}, theta, cfg);
      double s = 0.0;
      for (double x : w) {
        CHECK(x >= 0.0);
        s += x;
      }
      CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
    }
  }

  TEST_CASE("bh sample mean is stable across seeds") {
    const ModelSpec m = make_model("bh1");
    std::vector<double> means;
    for (std::uint64_t seed : {1u, 2u}) {
      Rng rng(seed);
      double acc = 0.0;
      for (int r = 0; r < 2000; ++r) acc += m.simulator->simulate(m.theta_star, rng).data.mean();
      means.push_back(acc / 2000);
    }
    CHECK(std::isfinite(means[0]));
    CHECK(std::abs(means[0] - means[1]) < 0.02);
  }

  TEST_CASE("bh log-likelihood equals a hand-rolled Gaussian sum") {
    const ModelSpec m = make_model("bh1");
    Rng rng(4);
    const TimeSeries y = m.simulator->simulate(m.theta_star, rng);
    BHConfig cfg;
    double ll = 0.0;
    std::array<double, 3> h{0.0, 0.0, 0.0};
    for (Eigen::Index t = 2; t < y.length(); ++t) {
      const double mean = bh_transition_mean(h, m.theta_star, cfg);
      const double z = (y.data(t, 0) - mean) / cfg.sigma_noise;
      ll += -0.5 * z * z - std::log(cfg.sigma_noise) - 0.5 * std::log(2 * std::numbers::pi);
      h = {h[1], h[2], y.data(t, 0)};
    }
    CHECK(m.exact_loglik(y, m.theta_star) == doctest::Approx(ll).epsilon(1e-12));
  }

  TEST_CASE("mvgbm gamma from the volatility matrix") {
    const Vec g = MvGBMConfig::standard().gamma();
    CHECK(g[0] == doctest::Approx(0.13));
    CHECK(g[1] == doctest::Approx(0.05));
    CHECK(g[2] == doctest::Approx(0.02));
  }

  TEST_CASE("mvgbm without volatility stays constant at theta equal gamma") {
    MvGBMConfig cfg = MvGBMConfig::standard();
    cfg.sigma_matrix *= 1e-12;
    MvGBM sim(cfg);
    Rng rng(5);
    const TimeSeries x = sim.simulate(cfg.gamma(), rng);
    CHECK(x.data.cwiseAbs().maxCoeff() < 1e-9);
    CHECK(x.dt == doctest::Approx(1.0 / 99));
  }

  TEST_CASE("mvgbm per-step covariance matches sigma sigma^T dt") {
    MvGBMConfig cfg = MvGBMConfig::standard();
    cfg.T = 100001;
    MvGBM sim(cfg);
    Rng rng(6);
    const TimeSeries x = sim.simulate(Vec::Zero(3), rng);
    const Mat inc = x.data.bottomRows(cfg.T - 1) - x.data.topRows(cfg.T - 1);
    const Mat c = inc.rowwise() - inc.colwise().mean();
    const Mat emp = c.transpose() * c / static_cast<double>(inc.rows() - 1);
    const Mat ref = cfg.sigma_matrix * cfg.sigma_matrix.transpose() * cfg.dt();
    for (int i = 0; i < 3; ++i) CHECK(std::abs(emp(i, i) / ref(i, i) - 1.0) < 0.05);
    CHECK(std::abs(emp(0, 1) / ref(0, 1) - 1.0) < 0.1);
  }

  TEST_CASE("mvgbm transition logpdf peak and symmetry") {
    const MvGBMConfig cfg = MvGBMConfig::standard();
    const double dt = 0.1;
    const Vec theta = vec({0.2, -0.5, 0.0});
    const Vec x0 = vec({0.3, -0.1, 0.2});
    const Vec mean = x0 + (theta - cfg.gamma()) * dt;
    const Mat cov = cfg.sigma_matrix * cfg.sigma_matrix.transpose() * dt;
    const double peak = -0.5 * std::log(std::pow(2 * std::numbers::pi, 3) * cov.determinant());
    CHECK(mvgbm_transition_logpdf(mean, x0, theta, cfg, dt) == doctest::Approx(peak).epsilon(1e-12));
    const Vec delta = vec({0.05, -0.02, 0.03});
    CHECK(mvgbm_transition_logpdf(mean + delta, x0, theta, cfg, dt) ==
          doctest::Approx(mvgbm_transition_logpdf(mean - delta, x0, theta, cfg, dt)).epsilon(1e-12));
  }

  TEST_CASE("mvgbm transition logpdf normalises on a 2D slice") {
    // Integrating the joint density over (x1, x2) at a fixed x3 gives the x3 marginal.
    const MvGBMConfig cfg = MvGBMConfig::standard();
    const double dt = 0.5;
    const Vec theta = Vec::Zero(3);
    const Vec x0 = Vec::Zero(3);
    const Vec mean = (theta - cfg.gamma()) * dt;
    const Mat cov = cfg.sigma_matrix * cfg.sigma_matrix.transpose() * dt;
    const double x3 = mean[2] + 0.1;
    const double s3 = std::sqrt(cov(2, 2));
    const double marginal = std::exp(-0.5 * std::pow((x3 - mean[2]) / s3, 2)) / (s3 * std::sqrt(2 * std::numbers::pi));
    const int n = 400;
    const double lo0 = mean[0] - 6 * std::sqrt(cov(0, 0)), hi0 = mean[0] + 6 * std::sqrt(cov(0, 0));
    const double lo1 = mean[1] - 6 * std::sqrt(cov(1, 1)), hi1 = mean[1] + 6 * std::sqrt(cov(1, 1));
    const double h0 = (hi0 - lo0) / n, h1 = (hi1 - lo1) / n;
    double acc = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        acc += std::exp(mvgbm_transition_logpdf(vec({lo0 + (i + 0.5) * h0, lo1 + (j + 0.5) * h1, x3}), x0, theta, cfg, dt));
    CHECK(std::abs(acc * h0 * h1 / marginal - 1.0) < 1e-3);
  }

  TEST_CASE("mvgbm singular covariance is rejected") {
    MvGBMConfig cfg = MvGBMConfig::standard();
    cfg.sigma_matrix.row(2).setZero();
    CHECK_THROWS_AS(mvgbm_transition_logpdf(Vec::Zero(3), Vec::Zero(3), Vec::Zero(3), cfg, 0.1), std::domain_error);
  }

  TEST_CASE("mvgbm sampling and logpdf agree on entropy") {
    const MvGBMConfig cfg = MvGBMConfig::standard();
    MvGBM sim(cfg);
    Rng rng(7);
    const Vec theta = vec({0.2, -0.5, 0.0});
    double acc = 0.0;
    double acc2 = 0.0;
    int count = 0;
    for (int r = 0; r < 100; ++r) {
      const TimeSeries x = sim.simulate(theta, rng);
      for (Eigen::Index t = 1; t < x.length(); ++t) {
        const double lp = mvgbm_transition_logpdf(x.data.row(t).transpose(), x.data.row(t - 1).transpose(), theta, cfg, cfg.dt());
        acc += lp;
        acc2 += lp * lp;
        ++count;
      }
    }
    const Mat cov = cfg.sigma_matrix * cfg.sigma_matrix.transpose() * cfg.dt();
    const double entropy = 0.5 * std::log(std::pow(2 * std::numbers::pi * std::numbers::e, 3) * cov.determinant());
    const double mean = acc / count;
    const double se = std::sqrt((acc2 / count - mean * mean) / count);
    CHECK(std::abs(mean + entropy) < 4 * se);
  }

  TEST_CASE("fw fixed parameters and share identity") {
    const FWConfig cfg;
    CHECK(cfg.mu == 0.01);
    CHECK(cfg.beta == 1.0);
    CHECK(cfg.phi_f == 1.0);
    CHECK(cfg.chi == 0.9);
    CHECK(cfg.alpha_0 == 2.1);
    CHECK(cfg.sigma_f == 0.752);
    Rng rng(8);
    for (int rep = 0; rep < 20; ++rep) {
      const FWTrace tr = fw_trace(vec({5000.0 * (rep % 3), 0.5, 2.0}), cfg, rng);
      for (std::size_t t = 0; t < tr.n_f.size(); ++t) CHECK(tr.n_f[t] + tr.n_c[t] == doctest::Approx(1.0).epsilon(1e-15));
    }
  }

  TEST_CASE("fw noise-free fixed point") {
    FWConfig cfg;
    cfg.sigma_f = 0.0;
    FrankeWesterhoff fw(cfg);
    Rng rng(9);
    CHECK(fw.simulate(vec({1000.0, 0.5, 0.0}), rng).data.isZero(0.0));
  }

  TEST_CASE("fw wealth recursion limits") {
    const FWConfig cfg;
    Rng rng(10);
    const FWTrace frozen = fw_trace(vec({100.0, 1.0, 1.0}), cfg, rng);
    for (std::size_t t = 0; t < frozen.w_f.size(); ++t) {
      CHECK(frozen.w_f[t] == frozen.w_f[0]);
      CHECK(frozen.w_c[t] == frozen.w_c[0]);
    }
    const FWTrace instant = fw_trace(vec({100.0, 0.0, 1.0}), cfg, rng);
    for (std::size_t t = 1; t < instant.w_f.size(); ++t) {
      CHECK(instant.w_f[t] == instant.g_f[t]);
      CHECK(instant.w_c[t] == instant.g_c[t]);
    }
  }

  TEST_CASE("simulators are bit-reproducible") {
    for (const auto& id : model_ids()) {
      const ModelSpec m = make_model(id);
      Rng r0(99);
      const Vec theta = m.theta_star.size() ? m.theta_star : m.prior->sample(r0);
      Rng a(42), b(42);
      CHECK(m.simulator->simulate(theta, a).data == m.simulator->simulate(theta, b).data);
    }
  }

  TEST_CASE("batch simulation does not depend on thread count") {
    const ModelSpec m = make_model("mvgbm");
    Rng rng(1);
    const Mat thetas = m.prior->sample_n(17, rng);
    const auto one = simulate_batch(*m.simulator, thetas, 5, 0, 1);
    const auto four = simulate_batch(*m.simulator, thetas, 5, 0, 4);
    for (std::size_t i = 0; i < one.size(); ++i) CHECK(one[i].data == four[i].data);
  }

  TEST_CASE("model registry") {
    CHECK(make_model("bh2").theta_star.isApprox(vec({-0.7, -0.4, 0.5, 0.3})));
    CHECK(make_model("mvgbm").theta_star.isApprox(vec({0.2, -0.5, 0.0})));
    CHECK_THROWS_AS(make_model("nope"), std::invalid_argument);
  }

  TEST_CASE("ground truth with a flat likelihood returns the prior") {
    ModelSpec m = make_model("mvgbm");
    m.exact_loglik = [](const TimeSeries&, const Vec&) { return 0.0; };
    Rng rng(12);
    MHConfig cfg;
    cfg.pilot_steps = 5000;
    cfg.main_steps = 40000;
    cfg.thin = 20;
    cfg.pilot_sd = prior_scaled_sd(*m.prior, 0.2);
    const MHResult r = ground_truth_posterior(m, TimeSeries{}, cfg, Vec::Zero(3), rng);
    const Vec mean = r.samples.colwise().mean();
    // Uniform(-1, 1) has sd 0.577; the thinned chain has roughly 2000 near-independent draws.
    CHECK(mean.cwiseAbs().maxCoeff() < 0.1);
  }

  TEST_CASE("ground truth concentrates near the generating value") {
    const ModelSpec m = make_model("bh1");
    Rng rng(13);
    const TimeSeries y = m.simulator->simulate(m.theta_star, rng);
    MHConfig cfg;
    cfg.pilot_steps = 5000;
    cfg.main_steps = 20000;
    cfg.thin = 20;
    cfg.pilot_sd = prior_scaled_sd(*m.prior, 0.01);
    const MHResult r = ground_truth_posterior(m, y, cfg, m.theta_star, rng);
    CHECK(r.main_acceptance > 0.05);
    CHECK((r.samples.colwise().mean().transpose() - m.theta_star).cwiseAbs().maxCoeff() < 0.3);
  }
}
