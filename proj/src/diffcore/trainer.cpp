#include "nsbi/diffcore/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "nsbi/core/log.hpp"

namespace nsbi::diff {

TrainReport train_early_stopping(ParamStore& store, std::size_t n_items, const BatchLoss& loss,
                                 const TrainConfig& cfg, Rng& rng) {
  if (n_items < 2) throw std::invalid_argument("training needs at least 2 items");
  if (cfg.batch_size == 0) throw std::invalid_argument("batch size must be positive");
  std::vector<std::size_t> perm(n_items);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  auto n_val = static_cast<std::size_t>(std::ceil(cfg.validation_fraction * static_cast<double>(n_items)));
  n_val = std::clamp<std::size_t>(n_val, cfg.validation_fraction > 0.0 ? 1 : 0, n_items - 1);
  std::vector<std::size_t> val(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_val));
  std::vector<std::size_t> train(perm.begin() + static_cast<std::ptrdiff_t>(n_val), perm.end());
  const std::uint64_t val_seed = rng();

  AdamConfig adam;
  adam.lr = cfg.lr;
  TrainReport rep;
  rep.best_validation_loss = std::numeric_limits<double>::infinity();
  std::vector<Tensor> best = store.snapshot();
  std::size_t since_best = 0;

  auto evaluate = [&](const std::vector<std::size_t>& items) {
    NoGradGuard guard;
    Rng vr(val_seed);
    double total = 0.0;
    for (std::size_t b = 0; b < items.size(); b += cfg.batch_size) {
      const std::size_t e = std::min(items.size(), b + cfg.batch_size);
      std::vector<std::size_t> batch(items.begin() + static_cast<std::ptrdiff_t>(b), items.begin() + static_cast<std::ptrdiff_t>(e));
      total += loss(batch, vr).item() * static_cast<double>(batch.size());
    }
    return total / static_cast<double>(items.size());
  };

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    std::shuffle(train.begin(), train.end(), rng);
    double total = 0.0;
    for (std::size_t b = 0; b < train.size(); b += cfg.batch_size) {
      const std::size_t e = std::min(train.size(), b + cfg.batch_size);
      std::vector<std::size_t> batch(train.begin() + static_cast<std::ptrdiff_t>(b), train.begin() + static_cast<std::ptrdiff_t>(e));
      store.zero_grad();
      const Var l = loss(batch, rng);
      if (!std::isfinite(l.item())) {
        throw std::runtime_error("training loss is not finite at epoch " + std::to_string(epoch));
      }
      backward(l);
      store.adam_step(adam);
      total += l.item() * static_cast<double>(batch.size());
    }
    rep.train_loss.push_back(total / static_cast<double>(train.size()));
    const double v = val.empty() ? rep.train_loss.back() : evaluate(val);
    if (!std::isfinite(v)) throw std::runtime_error("validation loss is not finite at epoch " + std::to_string(epoch));
    rep.validation_loss.push_back(v);
    rep.epochs = epoch;
    if (v < rep.best_validation_loss) {
      rep.best_validation_loss = v;
      rep.best_epoch = epoch;
      best = store.snapshot();
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      rep.early_stopped = true;
      break;
    }
  }
  store.restore(best);
  log_info("trained " + std::to_string(rep.epochs) + " epochs, best validation loss " +
           std::to_string(rep.best_validation_loss) + " at epoch " + std::to_string(rep.best_epoch));
  return rep;
}

}  // namespace nsbi::diff
