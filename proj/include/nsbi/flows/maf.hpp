#pragma once

#include <vector>

#include "nsbi/core/rng.hpp"
#include "nsbi/core/types.hpp"
#include "nsbi/diffcore/layers.hpp"

namespace nsbi {

struct MafConfig {
  std::size_t dim = 1;
  std::size_t context_dim = 0;
  std::size_t transforms = 5;
  std::size_t hidden = 50;
  std::size_t blocks = 2;
  /// Log-scales are squashed to (-clamp, clamp).
  double scale_clamp = 7.0;
};

/// Conditional masked autoregressive flow. Each transform maps x to x * exp(s) + m where
/// (m, s) for coordinate i depend on the coordinates before i and on the context.
class MaskedAutoregressiveFlow {
 public:
  struct ToBase {
    diff::Var u;                      // [B x d]
    diff::Var logdet;                 // [B]
    std::vector<diff::Var> per_transform_logdet;
  };

  MaskedAutoregressiveFlow() = default;
  MaskedAutoregressiveFlow(MafConfig cfg, diff::ParamStore& store, Rng& rng, const std::string& prefix = "flow");

  [[nodiscard]] const MafConfig& config() const { return cfg_; }
  [[nodiscard]] const std::vector<std::vector<std::size_t>>& permutations() const { return perms_; }
  void set_permutations(std::vector<std::vector<std::size_t>> perms);

  /// context may be an empty Var when context_dim == 0.
  [[nodiscard]] ToBase to_base(const diff::Var& x, const diff::Var& context) const;

  /// Per-row log-density, shape [B].
  [[nodiscard]] diff::Var log_prob(const diff::Var& x, const diff::Var& context) const;

  /// Inverse map from base space; rows of `context` pair with rows of `u` (one row broadcasts).
  [[nodiscard]] Mat from_base(const Mat& u, const Mat& context) const;

  [[nodiscard]] Mat sample(std::size_t n, const Vec& context, Rng& rng) const;

  /// Zeroes every output layer so each transform is the identity.
  void zero_output_layers();

 private:
  struct Made {
    diff::MaskedLinear input;
    diff::Linear context;
    std::vector<diff::MaskedLinear> hidden;
    diff::MaskedLinear output;
  };

  /// Returns (shift, log-scale), each [B x d].
  [[nodiscard]] std::pair<diff::Var, diff::Var> made_forward(std::size_t k, const diff::Var& x,
                                                             const diff::Var& context) const;
  [[nodiscard]] diff::Var permute(const diff::Var& x, std::size_t k, bool inverse) const;

  MafConfig cfg_;
  std::vector<Made> mades_;
  std::vector<std::vector<std::size_t>> perms_;
  std::vector<diff::Var> perm_mats_;
};

}  // namespace nsbi
