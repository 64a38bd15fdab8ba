#include "nsbi/ratio/nre.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "nsbi/core/log.hpp"
#include "nsbi/diffcore/eigen_bridge.hpp"

namespace nsbi {

using diff::Shape;
using diff::Tensor;
using diff::Var;

namespace {

Mat take(const Mat& m, const std::vector<std::size_t>& rows) {
  Mat out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(static_cast<Eigen::Index>(rows[i]));
  return out;
}

struct DenseLayer {
  Mat w;  // [in x out]
  Vec b;
};

DenseLayer freeze_layer(const diff::Linear& l) {
  return {diff::to_matrix(l.weight().value()), diff::to_vector(l.bias().value())};
}

}  // namespace

RatioEstimator::RatioEstimator(NreConfig cfg, std::shared_ptr<const Prior> prior, Eigen::Index series_dim,
                               Eigen::Index series_length, std::uint64_t seed)
    : cfg_(cfg), prior_(std::move(prior)), series_dim_(series_dim), series_length_(series_length) {
  Rng rng(seed);
  cond_.embedding = Embedding(cfg_.embedding, series_dim, series_length, store_, rng);
  const auto in = static_cast<std::size_t>(cond_.embedding.output_dim() + prior_->dim());
  input_ = diff::Linear(store_, "ratio.in", in, cfg_.hidden, rng);
  for (std::size_t b = 0; b < cfg_.blocks; ++b) {
    const std::string p = "ratio.block" + std::to_string(b);
    blocks_.emplace_back(diff::Linear(store_, p + ".a", cfg_.hidden, cfg_.hidden, rng),
                         diff::Linear(store_, p + ".b", cfg_.hidden, cfg_.hidden, rng));
  }
  output_ = diff::Linear(store_, "ratio.out", cfg_.hidden, 1, rng);
}

Var RatioEstimator::logits(const Var& z_theta, const Var& context) const {
  Var h = input_.forward(diff::concat({context, z_theta}, 1));
  for (const auto& [a, b] : blocks_) h = h + b.forward(diff::relu(a.forward(diff::relu(h))));
  const Var out = output_.forward(diff::relu(h));
  return diff::reshape(out, Shape{out.shape()[0]});
}

Var RatioEstimator::nre_loss(const TrainSet& data, const std::vector<std::size_t>& items, std::size_t K, Rng& rng) const {
  const std::size_t B = items.size();
  if (K == 0 || K >= B) {
    throw std::invalid_argument("contrast count K = " + std::to_string(K) + " must satisfy 0 < K < batch size " +
                                std::to_string(B));
  }
  const Mat theta = take(data.theta, items);
  const Var ctx = cond_.context(take(data.features, items));
  std::vector<std::size_t> theta_rows, ctx_rows;
  theta_rows.reserve(B * (K + 1));
  ctx_rows.reserve(B * (K + 1));
  std::vector<std::size_t> others(B - 1);
  for (std::size_t i = 0; i < B; ++i) {
    std::size_t o = 0;
    for (std::size_t j = 0; j < B; ++j)
      if (j != i) others[o++] = j;
    for (std::size_t k = 0; k < K; ++k) {
      std::uniform_int_distribution<std::size_t> pick(k, others.size() - 1);
      std::swap(others[k], others[pick(rng)]);
    }
    theta_rows.push_back(i);
    ctx_rows.push_back(i);
    for (std::size_t k = 0; k < K; ++k) {
      theta_rows.push_back(others[k]);
      ctx_rows.push_back(i);
    }
  }
  const Var z = diff::constant(diff::from_matrix(cond_.theta_std.apply(take(theta, theta_rows))));
  const Var f = diff::reshape(logits(z, diff::take_rows(ctx, ctx_rows)), Shape{B, K + 1});
  return diff::mean(diff::logsumexp(f, true) - diff::slice(f, 1, 0, 1));
}

diff::TrainReport RatioEstimator::train(const TrainSet& data, Rng& rng) {
  if (data.size() < 2) throw std::invalid_argument("training set needs at least 2 pairs");
  cond_.freeze(data.theta, data.features);
  const std::size_t K = cfg_.contrasts;
  diff::BatchLoss loss = [&](const std::vector<std::size_t>& items, Rng& r) {
    // A short trailing batch uses every other member as a contrast.
    return nre_loss(data, items, std::min(K, items.size() - 1), r);
  };
  return diff::train_early_stopping(store_, static_cast<std::size_t>(data.size()), loss, cfg_.train, rng);
}

Vec RatioEstimator::log_ratio(const Mat& thetas, const Vec& raw_features) const {
  diff::NoGradGuard guard;
  const Var ctx = cond_.context(raw_features.transpose().replicate(thetas.rows(), 1));
  const Var z = diff::constant(diff::from_matrix(cond_.theta_std.apply(thetas)));
  return diff::to_vector(logits(z, ctx).value());
}

double RatioEstimator::posterior_logpdf_unnorm(const Vec& theta, const Vec& raw_features) const {
  const double lp = prior_->log_prob(theta);
  if (!std::isfinite(lp)) return -std::numeric_limits<double>::infinity();
  return lp + log_ratio(theta.transpose(), raw_features)[0];
}

LogTarget RatioEstimator::posterior_target(const Vec& raw_features) const {
  Vec ctx;
  {
    diff::NoGradGuard guard;
    ctx = diff::to_vector(cond_.context(raw_features.transpose()).value());
  }
  auto first = freeze_layer(input_);
  std::vector<std::pair<DenseLayer, DenseLayer>> blocks;
  for (const auto& [a, b] : blocks_) blocks.emplace_back(freeze_layer(a), freeze_layer(b));
  auto last = freeze_layer(output_);
  const Eigen::Index c = ctx.size();
  // The context part of the first layer is fixed for a given observation.
  const Vec base = first.w.topRows(c).transpose() * ctx + first.b;
  const Mat w_theta = first.w.bottomRows(first.w.rows() - c).transpose();
  return [prior = prior_, std = cond_.theta_std, base, w_theta, blocks = std::move(blocks),
          last = std::move(last)](const Vec& theta) {
    const double lp = prior->log_prob(theta);
    if (!std::isfinite(lp)) return -std::numeric_limits<double>::infinity();
    Vec h = base + w_theta * std.apply(theta);
    for (const auto& [a, b] : blocks) {
      const Vec t = a.w.transpose() * h.cwiseMax(0.0) + a.b;
      h += b.w.transpose() * t.cwiseMax(0.0) + b.b;
    }
    return lp + (last.w.transpose() * h.cwiseMax(0.0) + last.b)[0];
  };
}

MHResult RatioEstimator::sample_mh(const Vec& raw_features, const MHConfig& cfg, const Vec& theta0, Rng& rng) const {
  return mh_chain(posterior_target(raw_features), cfg, theta0, rng);
}

Mat RatioEstimator::sample_sir(std::size_t n_out, std::size_t n_proposals, const Vec& raw_features, Rng& rng) const {
  const Mat proposals = prior_->sample_n(n_proposals, rng);
  return sir_resample(proposals, log_ratio(proposals, raw_features), n_out, rng);
}

void RatioEstimator::zero_output_layer() { output_.rescale(0.0); }

Blob RatioEstimator::to_blob() const {
  Blob blob;
  blob.kind = "nre";
  blob.config = {{"embedding", embedding_config_json(cfg_.embedding)},
                 {"hidden", cfg_.hidden},
                 {"blocks", cfg_.blocks},
                 {"contrasts", cfg_.contrasts},
                 {"theta_dim", prior_->dim()},
                 {"series_dim", series_dim_},
                 {"series_length", series_length_}};
  cond_.save(blob);
  append_params(blob, store_);
  return blob;
}

std::unique_ptr<RatioEstimator> RatioEstimator::from_blob(const Blob& blob, std::shared_ptr<const Prior> prior) {
  if (blob.kind != "nre") throw std::invalid_argument("blob holds a '" + blob.kind + "' model, expected nre");
  const auto& c = blob.config;
  if (c.at("theta_dim").get<Eigen::Index>() != prior->dim()) throw std::invalid_argument("prior dimension does not match the stored network");
  NreConfig cfg;
  cfg.embedding = embedding_config_from_json(c.at("embedding"));
  cfg.hidden = c.at("hidden").get<std::size_t>();
  cfg.blocks = c.at("blocks").get<std::size_t>();
  cfg.contrasts = c.at("contrasts").get<std::size_t>();
  auto nre = std::make_unique<RatioEstimator>(cfg, std::move(prior), c.at("series_dim").get<Eigen::Index>(),
                                              c.at("series_length").get<Eigen::Index>(), 0);
  nre->cond_.load(blob);
  load_params(blob, nre->store_);
  return nre;
}

SequentialResult snre_rounds(RatioEstimator& nre, const Simulator& sim, const TimeSeries& observation,
                             const RoundSettings& rounds, const MHConfig& proposal_mh, std::uint64_t seed) {
  if (rounds.rounds == 0 || rounds.sims_per_round == 0) throw std::invalid_argument("rounds and simulations per round must be >= 1");
  SequentialResult res;
  Rng proposal_rng(derive_seed(seed, 1));
  Rng train_rng(derive_seed(seed, 2));
  const std::uint64_t sim_seed = derive_seed(seed, 3);
  const Vec obs_features = nre.features(observation);
  MHConfig mh = proposal_mh;
  mh.main_steps = rounds.sims_per_round * mh.thin;
  for (std::size_t m = 0; m < rounds.rounds; ++m) {
    Mat theta;
    if (m == 0) {
      theta = nre.prior().sample_n(rounds.sims_per_round, proposal_rng);
    } else {
      // Start from the previous proposal with the highest target value.
      const LogTarget target = nre.posterior_target(obs_features);
      const Mat& prev = res.proposals.back();
      Eigen::Index best = 0;
      double best_lt = -std::numeric_limits<double>::infinity();
      for (Eigen::Index i = 0; i < prev.rows(); ++i) {
        const double lt = target(prev.row(i).transpose());
        if (lt > best_lt) {
          best_lt = lt;
          best = i;
        }
      }
      theta = mh_chain(target, mh, prev.row(best).transpose(), proposal_rng).samples;
    }
    const auto xs = simulate_batch(sim, theta, sim_seed, m * rounds.sims_per_round, rounds.threads);
    res.simulations += xs.size();
    res.data.append(theta, nre.features(xs), static_cast<int>(m));
    res.proposals.push_back(theta);
    res.reports.push_back(nre.train(res.data, train_rng));
    log_info("snre round " + std::to_string(m + 1) + "/" + std::to_string(rounds.rounds) + " done");
  }
  return res;
}

}  // namespace nsbi
