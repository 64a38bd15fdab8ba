#pragma once

#include <string>

#include <json.hpp>

#include "nsbi/cli/config.hpp"
#include "nsbi/core/types.hpp"
#include "nsbi/io/csv.hpp"
#include "nsbi/simulators/models.hpp"

namespace nsbi {

/// Failure after artifacts were started; a failure manifest has already been written.
class RunFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class RunStage { kTrain, kSample };

/// The configured model with any prior override applied.
ModelSpec configured_model(const RunConfig& cfg);

/// Observation from run.observation, or simulated at the generating parameter on the "observation" stream.
TimeSeries load_or_simulate_observation(const RunConfig& cfg, const ModelSpec& model, Vec* generating_theta);

TimeSeries table_to_series(const Table& t);
Table series_to_table(const TimeSeries& x);

/// Executes the pipeline and writes artifacts plus manifest.json into cfg.output_dir.
/// Returns the manifest. Stage kTrain stops after the trained network is saved.
nlohmann::json run_pipeline(const RunConfig& cfg, RunStage stage = RunStage::kSample);

/// Simulation-based calibration of an amortized method; writes ranks.csv, histogram.json, manifest.json.
nlohmann::json run_sbc(const RunConfig& cfg);

/// Re-runs the configuration echoed in a manifest into `output_dir` and compares output hashes.
nlohmann::json reproduce(const std::string& manifest_path, const std::string& output_dir);

/// Draws from a saved estimator for an observation CSV.
Mat sample_saved_model(const std::string& blob_path, const std::string& observation_csv, std::size_t n,
                       std::uint64_t seed);

nlohmann::json score_files(const std::string& reference_csv, const std::string& candidate_csv, double p,
                           std::vector<std::uint64_t> seeds = {});

}  // namespace nsbi
