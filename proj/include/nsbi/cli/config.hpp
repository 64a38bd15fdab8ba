#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "nsbi/core/types.hpp"
#include "nsbi/diffcore/trainer.hpp"
#include "nsbi/summaries/embedding.hpp"

namespace nsbi {

/// Invalid configuration; `what()` lists every offending field.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::vector<std::string>& problems);
  [[nodiscard]] const std::vector<std::string>& problems() const { return problems_; }

 private:
  std::vector<std::string> problems_;
};

inline const std::vector<std::string> kMethods = {"npe", "snpe", "nre", "snre", "kde", "parametric", "abc", "latent"};

bool is_neural_method(const std::string& method);
bool is_sequential_method(const std::string& method);

struct RunConfig {
  // [run]
  std::string model = "bh1";
  std::string method = "snpe";
  std::uint64_t seed = 0;
  std::string output_dir = "run";
  unsigned threads = 1;
  std::string observation_file;
  std::optional<Vec> theta_true;

  // [budget]
  std::size_t rounds = 10;
  std::size_t sims_per_round = 1000;
  std::size_t simulations = 10000;
  std::size_t R = 1;

  // [prior]
  std::optional<Vec> prior_lower;
  std::optional<Vec> prior_upper;

  // [network]
  EmbeddingConfig embedding;
  std::size_t transforms = 5;
  std::size_t hidden = 50;
  std::size_t blocks = 2;
  double scale_clamp = 7.0;
  std::size_t atoms = 10;
  std::size_t contrasts = 9;

  // [train]
  diff::TrainConfig train;

  // [sampling]
  std::size_t samples = 1000;
  std::string ratio_sampler = "mh";
  std::size_t sir_proposals_per_sample = 100;
  std::size_t mh_pilot_steps = 50000;
  std::size_t mh_thin = 100;
  double pilot_fraction = 0.01;

  // [classic]
  bool pooled = false;
  double abc_quantile = 0.01;
  std::size_t abc_pilot = 1000;
  double latent_noise_sd = 0.1;

  // [ground_truth]
  bool ground_truth = false;
  std::size_t gt_pilot_steps = 50000;
  std::size_t gt_main_steps = 100000;
  std::size_t gt_thin = 100;
  double wasserstein_p = 2.0;

  // [sbc]
  std::size_t sbc_replicates = 500;
  std::size_t sbc_L = 100;
  std::size_t sbc_bins = 20;
};

/// Parses INI text; unknown sections or keys and malformed values are reported together.
RunConfig parse_run_config(const std::string& ini_text, const std::string& source = "<config>");
RunConfig load_run_config(const std::string& path);

/// Canonical INI rendering; parse_run_config(format_run_config(c)) reproduces c.
std::string format_run_config(const RunConfig& cfg);

/// Semantic checks against the chosen model; throws ConfigError.
void validate_run_config(const RunConfig& cfg);

/// Simulator calls the method is expected to make.
std::size_t expected_method_calls(const RunConfig& cfg);

std::vector<double> parse_number_list(const std::string& text);

}  // namespace nsbi
