#pragma once

#include <cstdint>
#include <vector>

#include "nsbi/core/types.hpp"

namespace nsbi {

/// Exact solution of a balanced transportation problem.
struct TransportSolution {
  double cost = 0.0;
  /// Integer flow per (source, sink), row-major, sources x sinks.
  std::vector<std::int64_t> flow;
  std::size_t pivots = 0;
};

/// Network simplex with block-search pivoting on the complete bipartite graph.
/// `supply` and `demand` must have equal sums; `cost` is sources x sinks.
TransportSolution solve_transport(const Mat& cost, const std::vector<std::int64_t>& supply,
                                  const std::vector<std::int64_t>& demand);

}  // namespace nsbi
