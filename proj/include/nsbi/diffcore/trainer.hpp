#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "nsbi/core/rng.hpp"
#include "nsbi/diffcore/adam.hpp"

namespace nsbi::diff {

struct TrainConfig {
  std::size_t batch_size = 50;
  double lr = 5e-4;
  double validation_fraction = 0.1;
  std::size_t patience = 20;
  std::size_t max_epochs = 500;
};

struct TrainReport {
  std::size_t epochs = 0;
  std::size_t best_epoch = 0;
  double best_validation_loss = 0.0;
  bool early_stopped = false;
  std::vector<double> train_loss;
  std::vector<double> validation_loss;
};

/// Mean loss over the given items; `rng` drives any per-item randomness such as contrast draws.
using BatchLoss = std::function<Var(const std::vector<std::size_t>& items, Rng& rng)>;

/// Minibatch Adam with a held-out validation split and early stopping.
/// The best parameters seen on the validation split are restored at the end.
TrainReport train_early_stopping(ParamStore& store, std::size_t n_items, const BatchLoss& loss,
                                 const TrainConfig& cfg, Rng& rng);

}  // namespace nsbi::diff
