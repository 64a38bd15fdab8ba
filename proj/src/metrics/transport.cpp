#include "nsbi/metrics/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace nsbi {

namespace {

enum ArcState : signed char { kUpper = -1, kTree = 0, kLower = 1 };

class NetworkSimplex {
 public:
  NetworkSimplex(const Mat& cost, const std::vector<std::int64_t>& supply, const std::vector<std::int64_t>& demand)
      : n0_(static_cast<long>(supply.size())), n1_(static_cast<long>(demand.size())) {
    nodes_ = n0_ + n1_;
    arcs_ = n0_ * n1_;
    const long all_nodes = nodes_ + 1;
    const long all_arcs = arcs_ + nodes_;
    supply_.assign(all_nodes, 0);
    for (long i = 0; i < n0_; ++i) supply_[i] = supply[i];
    for (long j = 0; j < n1_; ++j) supply_[n0_ + j] = -demand[j];
    pi_.assign(all_nodes, 0.0);
    parent_.assign(all_nodes, -1);
    thread_.assign(all_nodes, 0);
    rev_thread_.assign(all_nodes, 0);
    succ_num_.assign(all_nodes, 0);
    last_succ_.assign(all_nodes, 0);
    pred_.assign(all_nodes, -1);
    forward_.assign(all_nodes, 0);
    cost_.assign(all_arcs, 0.0);
    flow_.assign(all_arcs, 0);
    source_.assign(all_arcs, 0);
    target_.assign(all_arcs, 0);
    state_.assign(all_arcs, kLower);
    double max_cost = 0.0;
    for (long a = 0; a < arcs_; ++a) {
      source_[a] = a / n1_;
      target_[a] = a % n1_ + n0_;
      cost_[a] = cost(a / n1_, a % n1_);
      max_cost = std::max(max_cost, std::abs(cost_[a]));
    }
    artificial_cost_ = (max_cost + 1.0) * static_cast<double>(nodes_);
  }

  std::size_t run() {
    const long root = nodes_;
    parent_[root] = -1;
    pred_[root] = -1;
    thread_[root] = 0;
    rev_thread_[0] = root;
    succ_num_[root] = nodes_ + 1;
    last_succ_[root] = root - 1;
    supply_[root] = 0;
    pi_[root] = 0.0;

    long e = arcs_;
    for (long u = 0; u < nodes_; ++u, ++e) {
      parent_[u] = root;
      pred_[u] = e;
      thread_[u] = u + 1;
      rev_thread_[u + 1] = u;
      succ_num_[u] = 1;
      last_succ_[u] = u;
      state_[e] = kTree;
      if (supply_[u] >= 0) {
        forward_[u] = 1;
        pi_[u] = 0.0;
        source_[e] = u;
        target_[e] = root;
        flow_[e] = supply_[u];
        cost_[e] = 0.0;
      } else {
        forward_[u] = 0;
        pi_[u] = artificial_cost_;
        source_[e] = root;
        target_[e] = u;
        flow_[e] = -supply_[u];
        cost_[e] = artificial_cost_;
      }
    }

    next_arc_ = 0;
    block_size_ = std::max(static_cast<long>(std::sqrt(static_cast<double>(arcs_))), 10L);

    initial_pivots();
    std::size_t pivots = 0;
    while (find_entering_arc()) {
      pivot();
      ++pivots;
    }
    for (long a = arcs_; a < arcs_ + nodes_; ++a) {
      if (flow_[a] != 0) throw std::runtime_error("transportation problem is infeasible");
    }
    return pivots;
  }

  [[nodiscard]] std::int64_t flow(long arc) const { return flow_[arc]; }
  [[nodiscard]] double cost(long arc) const { return cost_[arc]; }
  [[nodiscard]] long arcs() const { return arcs_; }

 private:
  double reduced(long a) const { return state_[a] * (cost_[a] + pi_[source_[a]] - pi_[target_[a]]); }

  bool worth_entering(double best) const {
    const double scale = std::max({std::abs(pi_[source_[in_arc_]]), std::abs(pi_[target_[in_arc_]]),
                                   std::abs(cost_[in_arc_])});
    return best < -kEpsilon * scale;
  }

  bool find_entering_arc() {
    double best = 0.0;
    long e = next_arc_;
    long count = block_size_;
    for (long k = 0; k < arcs_; ++k, ++e) {
      if (e == arcs_) e = 0;
      const double c = reduced(e);
      if (c < best) {
        best = c;
        in_arc_ = e;
      }
      if (--count == 0) {
        if (best < 0.0 && worth_entering(best)) {
          next_arc_ = e;
          return true;
        }
        count = block_size_;
      }
    }
    if (best < 0.0 && worth_entering(best)) {
      next_arc_ = e;
      return true;
    }
    return false;
  }

  // Cheapest incoming arc of every sink, pivoted in once before the block search starts.
  void initial_pivots() {
    for (long v = n0_; v < nodes_; ++v) {
      long best_arc = -1;
      double best = std::numeric_limits<double>::max();
      for (long i = 0; i < n0_; ++i) {
        const long a = i * n1_ + (v - n0_);
        if (cost_[a] < best) {
          best = cost_[a];
          best_arc = a;
        }
      }
      if (best_arc < 0) continue;
      in_arc_ = best_arc;
      if (reduced(in_arc_) >= 0.0) continue;
      pivot();
    }
  }

  void pivot() {
    find_join_node();
    const bool change = find_leaving_arc();
    if (delta_ == kInfFlow) throw std::runtime_error("transportation problem is unbounded");
    change_flow(change);
    if (change) {
      update_tree();
      update_potential();
    }
  }

  void find_join_node() {
    long u = source_[in_arc_];
    long v = target_[in_arc_];
    while (u != v) {
      if (succ_num_[u] < succ_num_[v]) {
        u = parent_[u];
      } else {
        v = parent_[v];
      }
    }
    join_ = u;
  }

  bool find_leaving_arc() {
    if (state_[in_arc_] == kLower) {
      first_ = source_[in_arc_];
      second_ = target_[in_arc_];
    } else {
      first_ = target_[in_arc_];
      second_ = source_[in_arc_];
    }
    delta_ = kInfFlow;
    int result = 0;
    for (long u = first_; u != join_; u = parent_[u]) {
      const std::int64_t d = forward_[u] ? flow_[pred_[u]] : kInfFlow;
      if (d < delta_) {
        delta_ = d;
        u_out_ = u;
        result = 1;
      }
    }
    for (long u = second_; u != join_; u = parent_[u]) {
      const std::int64_t d = forward_[u] ? kInfFlow : flow_[pred_[u]];
      if (d <= delta_) {
        delta_ = d;
        u_out_ = u;
        result = 2;
      }
    }
    if (result == 1) {
      u_in_ = first_;
      v_in_ = second_;
    } else {
      u_in_ = second_;
      v_in_ = first_;
    }
    return result != 0;
  }

  void change_flow(bool change) {
    if (delta_ > 0) {
      const std::int64_t val = state_[in_arc_] * delta_;
      flow_[in_arc_] += val;
      for (long u = source_[in_arc_]; u != join_; u = parent_[u]) flow_[pred_[u]] += forward_[u] ? -val : val;
      for (long u = target_[in_arc_]; u != join_; u = parent_[u]) flow_[pred_[u]] += forward_[u] ? val : -val;
    }
    if (change) {
      state_[in_arc_] = kTree;
      state_[pred_[u_out_]] = flow_[pred_[u_out_]] == 0 ? kLower : kUpper;
    } else {
      state_[in_arc_] = static_cast<signed char>(-state_[in_arc_]);
    }
  }

  // Re-hangs the subtree below the leaving arc under the entering arc, maintaining the
  // thread (preorder) list, subtree sizes and last successors.
  void update_tree() {
    long u = last_succ_[u_in_];
    const long old_rev_thread = rev_thread_[u_out_];
    const long old_succ_num = succ_num_[u_out_];
    const long old_last_succ = last_succ_[u_out_];
    v_out_ = parent_[u_out_];
    long right = thread_[u];
    long last = old_rev_thread == v_in_ ? thread_[last_succ_[u_out_]] : thread_[v_in_];

    long stem = u_in_;
    thread_[v_in_] = stem;
    dirty_revs_.clear();
    dirty_revs_.push_back(v_in_);
    long par_stem = v_in_;
    while (stem != u_out_) {
      const long new_stem = parent_[stem];
      thread_[u] = new_stem;
      dirty_revs_.push_back(u);
      const long w = rev_thread_[stem];
      thread_[w] = right;
      rev_thread_[right] = w;
      parent_[stem] = par_stem;
      par_stem = stem;
      stem = new_stem;
      u = last_succ_[stem] == last_succ_[par_stem] ? rev_thread_[par_stem] : last_succ_[stem];
      right = thread_[u];
    }
    parent_[u_out_] = par_stem;
    thread_[u] = last;
    rev_thread_[last] = u;
    last_succ_[u_out_] = u;

    if (old_rev_thread != v_in_) {
      thread_[old_rev_thread] = right;
      rev_thread_[right] = old_rev_thread;
    }
    for (long d : dirty_revs_) rev_thread_[thread_[d]] = d;

    long tmp_sc = 0;
    const long tmp_ls = last_succ_[u_out_];
    u = u_out_;
    while (u != u_in_) {
      const long w = parent_[u];
      pred_[u] = pred_[w];
      forward_[u] = !forward_[w];
      tmp_sc += succ_num_[u] - succ_num_[w];
      succ_num_[u] = tmp_sc;
      last_succ_[w] = tmp_ls;
      u = w;
    }
    pred_[u_in_] = in_arc_;
    forward_[u_in_] = u_in_ == source_[in_arc_];
    succ_num_[u_in_] = old_succ_num;

    long up_limit_in = -1;
    long up_limit_out = -1;
    if (last_succ_[join_] == v_in_) {
      up_limit_out = join_;
    } else {
      up_limit_in = join_;
    }
    for (u = v_in_; u != up_limit_in && last_succ_[u] == v_in_; u = parent_[u]) last_succ_[u] = last_succ_[u_out_];
    if (join_ != old_rev_thread && v_in_ != old_rev_thread) {
      for (u = v_out_; u != up_limit_out && last_succ_[u] == old_last_succ; u = parent_[u])
        last_succ_[u] = old_rev_thread;
    } else {
      for (u = v_out_; u != up_limit_out && last_succ_[u] == old_last_succ; u = parent_[u])
        last_succ_[u] = last_succ_[u_out_];
    }
    for (u = v_in_; u != join_; u = parent_[u]) succ_num_[u] += old_succ_num;
    for (u = v_out_; u != join_; u = parent_[u]) succ_num_[u] -= old_succ_num;
  }

  void update_potential() {
    const double sigma = forward_[u_in_] ? pi_[v_in_] - pi_[u_in_] - cost_[pred_[u_in_]]
                                         : pi_[v_in_] - pi_[u_in_] + cost_[pred_[u_in_]];
    const long end = thread_[last_succ_[u_in_]];
    for (long u = u_in_; u != end; u = thread_[u]) pi_[u] += sigma;
  }

  static constexpr double kEpsilon = 16.0 * std::numeric_limits<double>::epsilon();
  static constexpr std::int64_t kInfFlow = std::numeric_limits<std::int64_t>::max();

  long n0_, n1_, nodes_ = 0, arcs_ = 0;
  double artificial_cost_ = 0.0;
  std::vector<std::int64_t> supply_, flow_;
  std::vector<double> pi_, cost_;
  std::vector<long> parent_, thread_, rev_thread_, succ_num_, last_succ_, pred_, source_, target_, dirty_revs_;
  std::vector<char> forward_;
  std::vector<signed char> state_;
  long next_arc_ = 0, block_size_ = 10;
  long in_arc_ = 0, join_ = 0, u_in_ = 0, v_in_ = 0, u_out_ = 0, v_out_ = 0, first_ = 0, second_ = 0;
  std::int64_t delta_ = 0;
};

}  // namespace

TransportSolution solve_transport(const Mat& cost, const std::vector<std::int64_t>& supply,
                                  const std::vector<std::int64_t>& demand) {
  if (cost.rows() != static_cast<Eigen::Index>(supply.size()) || cost.cols() != static_cast<Eigen::Index>(demand.size())) {
    throw std::invalid_argument("cost matrix shape does not match supplies and demands");
  }
  if (supply.empty() || demand.empty()) throw std::invalid_argument("transportation problem has no nodes");
  for (auto s : supply)
    if (s < 0) throw std::invalid_argument("negative supply");
  for (auto d : demand)
    if (d < 0) throw std::invalid_argument("negative demand");
  if (std::accumulate(supply.begin(), supply.end(), std::int64_t{0}) !=
      std::accumulate(demand.begin(), demand.end(), std::int64_t{0})) {
    throw std::invalid_argument("total supply differs from total demand");
  }
  if (!cost.allFinite()) throw std::invalid_argument("cost matrix has non-finite entries");

  NetworkSimplex ns(cost, supply, demand);
  TransportSolution out;
  out.pivots = ns.run();
  out.flow.resize(static_cast<std::size_t>(ns.arcs()));
  for (long a = 0; a < ns.arcs(); ++a) {
    out.flow[a] = ns.flow(a);
    out.cost += static_cast<double>(ns.flow(a)) * ns.cost(a);
  }
  return out;
}

}  // namespace nsbi
