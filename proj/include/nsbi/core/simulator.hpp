#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "nsbi/core/rng.hpp"
#include "nsbi/core/types.hpp"

namespace nsbi {

class Simulator {
 public:
  virtual ~Simulator() = default;
  [[nodiscard]] virtual std::string name() const = 0;
  [[nodiscard]] virtual Eigen::Index theta_dim() const = 0;
  [[nodiscard]] virtual Eigen::Index output_dim() const = 0;
  [[nodiscard]] virtual std::vector<std::string> param_names() const = 0;
  [[nodiscard]] virtual TimeSeries simulate(const Vec& theta, Rng& rng) const = 0;
};

/// Forwards to another simulator and counts every call.
class CountingSimulator : public Simulator {
 public:
  explicit CountingSimulator(std::shared_ptr<const Simulator> inner) : inner_(std::move(inner)) {}

  [[nodiscard]] std::string name() const override { return inner_->name(); }
  [[nodiscard]] Eigen::Index theta_dim() const override { return inner_->theta_dim(); }
  [[nodiscard]] Eigen::Index output_dim() const override { return inner_->output_dim(); }
  [[nodiscard]] std::vector<std::string> param_names() const override { return inner_->param_names(); }
  [[nodiscard]] TimeSeries simulate(const Vec& theta, Rng& rng) const override {
    calls_.fetch_add(1, std::memory_order_relaxed);
    return inner_->simulate(theta, rng);
  }

  [[nodiscard]] std::uint64_t calls() const { return calls_.load(); }
  void reset() { calls_.store(0); }

 private:
  std::shared_ptr<const Simulator> inner_;
  mutable std::atomic<std::uint64_t> calls_{0};
};

/// Simulates every row of `thetas`; draw i uses the stream derive_seed(seed, first_index + i),
/// so the output does not depend on `threads`.
std::vector<TimeSeries> simulate_batch(const Simulator& sim, const Mat& thetas, std::uint64_t seed,
                                       std::uint64_t first_index = 0, unsigned threads = 1);

}  // namespace nsbi
