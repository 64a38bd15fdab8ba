#include "nsbi/flows/npe.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
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

}  // namespace

NeuralPosteriorEstimator::NeuralPosteriorEstimator(NpeConfig cfg, std::shared_ptr<const Prior> prior,
                                                   Eigen::Index series_dim, Eigen::Index series_length,
                                                   std::uint64_t seed)
    : cfg_(cfg), prior_(std::move(prior)), series_dim_(series_dim), series_length_(series_length) {
  Rng rng(seed);
  cond_.embedding = Embedding(cfg_.embedding, series_dim, series_length, store_, rng);
  MafConfig mc;
  mc.dim = static_cast<std::size_t>(prior_->dim());
  mc.context_dim = static_cast<std::size_t>(cond_.embedding.output_dim());
  mc.transforms = cfg_.transforms;
  mc.hidden = cfg_.hidden;
  mc.blocks = cfg_.blocks;
  mc.scale_clamp = cfg_.scale_clamp;
  flow_ = MaskedAutoregressiveFlow(mc, store_, rng);
}

Var NeuralPosteriorEstimator::mle_loss(const TrainSet& data, const std::vector<std::size_t>& items) const {
  const Var z = diff::constant(diff::from_matrix(cond_.theta_std.apply(take(data.theta, items))));
  const Var ctx = cond_.context(take(data.features, items));
  return diff::scale(diff::mean(flow_.log_prob(z, ctx)), -1.0);
}

Var NeuralPosteriorEstimator::atomic_loss(const TrainSet& data, const std::vector<std::size_t>& items, Rng& rng) const {
  const std::size_t B = items.size();
  const std::size_t K = std::min(cfg_.atoms, B - 1);
  if (K == 0) return mle_loss(data, items);
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
    // Partial Fisher-Yates: the first K entries become a uniform draw without replacement.
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
  const Mat atoms = take(theta, theta_rows);
  Tensor log_prior(Shape{B, K + 1});
  for (std::size_t r = 0; r < theta_rows.size(); ++r) {
    log_prior[r] = prior_->log_prob(atoms.row(static_cast<Eigen::Index>(r)).transpose());
  }
  const Var z = diff::constant(diff::from_matrix(cond_.theta_std.apply(atoms)));
  const Var lq = diff::reshape(flow_.log_prob(z, diff::take_rows(ctx, ctx_rows)), Shape{B, K + 1});
  const Var logits = lq - diff::constant(std::move(log_prior));
  const Var lse = diff::logsumexp(logits, true);
  return diff::mean(lse - diff::slice(logits, 1, 0, 1));
}

diff::TrainReport NeuralPosteriorEstimator::train(const TrainSet& data, bool atomic, Rng& rng) {
  if (data.size() < 2) throw std::invalid_argument("training set needs at least 2 pairs");
  cond_.freeze(data.theta, data.features);
  diff::BatchLoss loss;
  if (atomic) {
    loss = [&](const std::vector<std::size_t>& items, Rng& r) { return atomic_loss(data, items, r); };
  } else {
    loss = [&](const std::vector<std::size_t>& items, Rng&) { return mle_loss(data, items); };
  }
  return diff::train_early_stopping(store_, static_cast<std::size_t>(data.size()), loss, cfg_.train, rng);
}

Vec NeuralPosteriorEstimator::log_prob(const Mat& thetas, const Vec& raw_features) const {
  diff::NoGradGuard guard;
  const Mat f = raw_features.transpose().replicate(thetas.rows(), 1);
  const Var z = diff::constant(diff::from_matrix(cond_.theta_std.apply(thetas)));
  const Vec lq = diff::to_vector(flow_.log_prob(z, cond_.context(f)).value());
  return lq.array() - cond_.theta_std.sd.array().log().sum();
}

Mat NeuralPosteriorEstimator::sample(std::size_t n, const Vec& raw_features, Rng& rng) const {
  Mat ctx;
  {
    diff::NoGradGuard guard;
    ctx = diff::to_matrix(cond_.context(raw_features.transpose()).value());
  }
  const Eigen::Index d = prior_->dim();
  Mat out(static_cast<Eigen::Index>(n), d);
  std::size_t have = 0, drawn = 0;
  const std::size_t chunk = std::max<std::size_t>(n, 256);
  while (have < n) {
    if (drawn > 1000 * chunk) {
      throw std::runtime_error("posterior sampling accepted " + std::to_string(have) + " of " + std::to_string(drawn) +
                               " draws inside the prior support");
    }
    const Mat theta = cond_.theta_std.invert(flow_.sample(chunk, ctx.row(0).transpose(), rng));
    drawn += chunk;
    for (Eigen::Index i = 0; i < theta.rows() && have < n; ++i) {
      const Vec t = theta.row(i).transpose();
      if (t.allFinite() && prior_->in_support(t)) out.row(static_cast<Eigen::Index>(have++)) = t.transpose();
    }
  }
  return out;
}

Blob NeuralPosteriorEstimator::to_blob() const {
  Blob blob;
  blob.kind = "npe";
  blob.config = {{"embedding", embedding_config_json(cfg_.embedding)},
                 {"transforms", cfg_.transforms},
                 {"hidden", cfg_.hidden},
                 {"blocks", cfg_.blocks},
                 {"scale_clamp", cfg_.scale_clamp},
                 {"atoms", cfg_.atoms},
                 {"theta_dim", prior_->dim()},
                 {"series_dim", series_dim_},
                 {"series_length", series_length_},
                 {"permutations", flow_.permutations()}};
  cond_.save(blob);
  append_params(blob, store_);
  return blob;
}

std::unique_ptr<NeuralPosteriorEstimator> NeuralPosteriorEstimator::from_blob(const Blob& blob,
                                                                              std::shared_ptr<const Prior> prior) {
  if (blob.kind != "npe") throw std::invalid_argument("blob holds a '" + blob.kind + "' model, expected npe");
  const auto& c = blob.config;
  if (c.at("theta_dim").get<Eigen::Index>() != prior->dim()) throw std::invalid_argument("prior dimension does not match the stored flow");
  NpeConfig cfg;
  cfg.embedding = embedding_config_from_json(c.at("embedding"));
  cfg.transforms = c.at("transforms").get<std::size_t>();
  cfg.hidden = c.at("hidden").get<std::size_t>();
  cfg.blocks = c.at("blocks").get<std::size_t>();
  cfg.scale_clamp = c.at("scale_clamp").get<double>();
  cfg.atoms = c.at("atoms").get<std::size_t>();
  auto npe = std::make_unique<NeuralPosteriorEstimator>(cfg, std::move(prior), c.at("series_dim").get<Eigen::Index>(),
                                                        c.at("series_length").get<Eigen::Index>(), 0);
  npe->flow_.set_permutations(c.at("permutations").get<std::vector<std::vector<std::size_t>>>());
  npe->cond_.load(blob);
  load_params(blob, npe->store_);
  return npe;
}

SequentialResult snpe_rounds(NeuralPosteriorEstimator& npe, const Simulator& sim, const TimeSeries& observation,
                             const RoundSettings& rounds, std::uint64_t seed) {
  if (rounds.rounds == 0 || rounds.sims_per_round == 0) throw std::invalid_argument("rounds and simulations per round must be >= 1");
  SequentialResult res;
  Rng proposal_rng(derive_seed(seed, 1));
  Rng train_rng(derive_seed(seed, 2));
  const std::uint64_t sim_seed = derive_seed(seed, 3);
  const Vec obs_features = npe.features(observation);
  for (std::size_t m = 0; m < rounds.rounds; ++m) {
    const Mat theta = m == 0 ? npe.prior().sample_n(rounds.sims_per_round, proposal_rng)
                             : npe.sample(rounds.sims_per_round, obs_features, proposal_rng);
    const auto xs = simulate_batch(sim, theta, sim_seed, m * rounds.sims_per_round, rounds.threads);
    res.simulations += xs.size();
    res.data.append(theta, npe.features(xs), static_cast<int>(m));
    res.proposals.push_back(theta);
    res.reports.push_back(npe.train(res.data, m > 0, train_rng));
    log_info("snpe round " + std::to_string(m + 1) + "/" + std::to_string(rounds.rounds) + " done");
  }
  return res;
}

}  // namespace nsbi
