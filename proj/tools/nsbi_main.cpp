#include <CLI11.hpp>

#include <iostream>

#include "nsbi/cli/pipeline.hpp"
#include "nsbi/core/log.hpp"
#include "nsbi/io/csv.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kRuntimeError = 2;

nsbi::RunConfig config_with_overrides(const std::string& path, const std::string& output, const std::string& seed) {
  nsbi::RunConfig cfg = nsbi::load_run_config(path);
  if (!output.empty()) cfg.output_dir = output;
  if (!seed.empty()) {
    try {
      cfg.seed = std::stoull(seed);
    } catch (const std::exception&) {
      throw nsbi::ConfigError({"--seed: '" + seed + "' is not a non-negative integer"});
    }
  }
  return cfg;
}

void print_summary(const nlohmann::json& manifest, const std::string& dir) {
  std::cout << "status: " << manifest.value("status", "?") << "\n";
  if (manifest.contains("simulation_calls")) std::cout << "simulation calls: " << manifest["simulation_calls"].dump() << "\n";
  for (const auto& o : manifest["outputs"]) std::cout << dir << "/" << o["file"].get<std::string>() << "  " << o["sha256"].get<std::string>() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Likelihood-free Bayesian estimation for time-series simulators"};
  app.require_subcommand(1);
  app.fallthrough();
  bool verbose = false;
  bool quiet = false;
  app.add_flag("-v,--verbose", verbose, "Print progress messages");
  app.add_flag("-q,--quiet", quiet, "Suppress warnings");

  std::string config_path, output, seed_text;
  auto add_config = [&](CLI::App* sub) {
    sub->add_option("-c,--config", config_path, "INI run configuration")->required()->check(CLI::ExistingFile);
    sub->add_option("-o,--output", output, "Override [run] output");
    sub->add_option("-s,--seed", seed_text, "Override [run] seed");
  };

  auto* run = app.add_subcommand("run", "Simulate, train or run the chain, sample, and optionally score against ground truth");
  add_config(run);
  auto* train = app.add_subcommand("train", "Train a neural estimator and save it as model.blob");
  add_config(train);
  auto* sbc = app.add_subcommand("sbc", "Simulation-based calibration of an amortized estimator");
  add_config(sbc);

  auto* simulate = app.add_subcommand("simulate", "Simulate one series from a model");
  std::string model = "bh1", theta_text, out_path;
  std::uint64_t seed = 0;
  simulate->add_option("-m,--model", model, "Model id: bh1, bh2, mvgbm, fw");
  simulate->add_option("-t,--theta", theta_text, "Comma-separated parameter vector (default: the model's generating value)");
  simulate->add_option("-s,--seed", seed, "Random seed");
  simulate->add_option("-o,--out", out_path, "Output CSV")->required();

  auto* sample = app.add_subcommand("sample", "Draw posterior samples from a saved estimator");
  std::string blob_path, obs_path;
  std::size_t n = 1000;
  sample->add_option("-b,--blob", blob_path, "model.blob from train or run")->required()->check(CLI::ExistingFile);
  sample->add_option("-y,--observation", obs_path, "Observation CSV")->required()->check(CLI::ExistingFile);
  sample->add_option("-n,--samples", n, "Number of samples");
  sample->add_option("-s,--seed", seed, "Random seed");
  sample->add_option("-o,--out", out_path, "Output CSV")->required();

  auto* score = app.add_subcommand("score", "Wasserstein and MMD between a reference and a candidate sample CSV");
  std::string ref_path, cand_path;
  double p = 2.0;
  score->add_option("-r,--reference", ref_path, "Ground-truth samples (sets the MMD bandwidth)")->required()->check(CLI::ExistingFile);
  score->add_option("-c,--candidate", cand_path, "Samples to score")->required()->check(CLI::ExistingFile);
  score->add_option("-p,--order", p, "Wasserstein order");
  score->add_option("-o,--out", out_path, "Report JSON (default: stdout)");

  auto* repro = app.add_subcommand("reproduce", "Re-run from a manifest and compare output hashes");
  std::string manifest_path;
  repro->add_option("-m,--manifest", manifest_path, "manifest.json of the original run")->required()->check(CLI::ExistingFile);
  repro->add_option("-o,--output", output, "Directory for the re-run")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }
  nsbi::set_log_level(quiet ? nsbi::LogLevel::kQuiet : verbose ? nsbi::LogLevel::kInfo : nsbi::LogLevel::kWarning);

  try {
    if (*run || *train) {
      const auto cfg = config_with_overrides(config_path, output, seed_text);
      print_summary(nsbi::run_pipeline(cfg, *run ? nsbi::RunStage::kSample : nsbi::RunStage::kTrain), cfg.output_dir);
    } else if (*sbc) {
      const auto cfg = config_with_overrides(config_path, output, seed_text);
      print_summary(nsbi::run_sbc(cfg), cfg.output_dir);
    } else if (*simulate) {
      nsbi::RunConfig cfg;
      cfg.model = model;
      cfg.seed = seed;
      if (!theta_text.empty()) {
        try {
          const auto v = nsbi::parse_number_list(theta_text);
          cfg.theta_true = Eigen::Map<const nsbi::Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
        } catch (const std::exception& e) {
          throw nsbi::ConfigError({std::string("--theta: ") + e.what()});
        }
      }
      nsbi::validate_run_config(cfg);
      const auto m = nsbi::configured_model(cfg);
      nsbi::write_table(out_path, nsbi::series_to_table(nsbi::load_or_simulate_observation(cfg, m, nullptr)));
    } else if (*sample) {
      const nsbi::Mat draws = nsbi::sample_saved_model(blob_path, obs_path, n, seed);
      nsbi::write_table(out_path, nsbi::Table{nsbi::theta_header(static_cast<std::size_t>(draws.cols())), draws});
    } else if (*score) {
      const auto report = nsbi::score_files(ref_path, cand_path, p);
      if (out_path.empty()) {
        std::cout << report.dump(2) << "\n";
      } else {
        nsbi::write_file(out_path, report.dump(2) + "\n");
      }
    } else if (*repro) {
      const auto result = nsbi::reproduce(manifest_path, output);
      std::cout << result.dump(2) << "\n";
      if (!result["identical"].get<bool>()) return kRuntimeError;
    }
  } catch (const nsbi::ConfigError& e) {
    std::cerr << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntimeError;
  }
  return kOk;
}
