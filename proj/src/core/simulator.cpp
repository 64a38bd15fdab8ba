#include "nsbi/core/simulator.hpp"

#include <algorithm>
#include <exception>
#include <thread>

namespace nsbi {

std::vector<TimeSeries> simulate_batch(const Simulator& sim, const Mat& thetas, std::uint64_t seed,
                                       std::uint64_t first_index, unsigned threads) {
  const auto n = static_cast<std::size_t>(thetas.rows());
  std::vector<TimeSeries> out(n);
  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      Rng rng(derive_seed(seed, first_index + i));
      out[i] = sim.simulate(thetas.row(static_cast<Eigen::Index>(i)).transpose(), rng);
    }
  };
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  if (threads == 1) {
    work(0, n);
    return out;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(threads);
  const std::size_t chunk = (n + threads - 1) / threads;
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      try {
        work(std::min(n, t * chunk), std::min(n, (t + 1) * chunk));
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

}  // namespace nsbi
