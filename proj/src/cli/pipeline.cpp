#include "nsbi/cli/pipeline.hpp"

#include <openssl/opensslv.h>

#include <Eigen/Core>
#include <boost/version.hpp>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <limits>

#include "nsbi/classic/surrogates.hpp"
#include "nsbi/core/log.hpp"
#include "nsbi/flows/npe.hpp"
#include "nsbi/io/blob.hpp"
#include "nsbi/io/chain.hpp"
#include "nsbi/io/csv.hpp"
#include "nsbi/metrics/metrics.hpp"
#include "nsbi/ratio/nre.hpp"
#include "nsbi/sbc/sbc.hpp"

namespace nsbi {

namespace fs = std::filesystem;

namespace {

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

nlohmann::json versions() {
  return {{"nsbi", NSBI_VERSION},
          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                        std::to_string(EIGEN_MINOR_VERSION)},
          {"boost", BOOST_LIB_VERSION},
          {"openssl", OPENSSL_VERSION_TEXT},
          {"compiler", __VERSION__}};
}

std::vector<double> to_std(const Vec& v) { return {v.data(), v.data() + v.size()}; }

Vec from_std(const std::vector<double>& v) { return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size())); }

/// Collects written files and assembles the manifest.
class Artifacts {
 public:
  Artifacts(const RunConfig& cfg, std::string command)
      : dir_(cfg.output_dir), start_(std::chrono::steady_clock::now()) {
    manifest_["command"] = std::move(command);
    manifest_["config"] = format_run_config(cfg);
    manifest_["versions"] = versions();
    manifest_["started_utc"] = utc_now();
    manifest_["outputs"] = nlohmann::json::array();
    fs::create_directories(dir_);
  }

  std::string path(const std::string& name) const { return (fs::path(dir_) / name).string(); }

  void write(const std::string& name, const std::string& contents) {
    write_file(path(name), contents);
    record(name);
  }
  void write(const std::string& name, const Table& t) { write(name, format_table(t)); }
  void write(const std::string& name, const Blob& b) { write(name, encode_blob(b)); }

  nlohmann::json& manifest() { return manifest_; }

  nlohmann::json finish(const std::string& status, const std::string& error = "") {
    manifest_["status"] = status;
    if (!error.empty()) manifest_["error"] = error;
    manifest_["wall_clock_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    write_file(path("manifest.json"), manifest_.dump(2) + "\n");
    return manifest_;
  }

 private:
  void record(const std::string& name) {
    manifest_["outputs"].push_back({{"file", name}, {"sha256", sha256_file(path(name))}});
  }

  std::string dir_;
  std::chrono::steady_clock::time_point start_;
  nlohmann::json manifest_;
};

NpeConfig npe_config(const RunConfig& c) {
  NpeConfig n;
  n.embedding = c.embedding;
  n.transforms = c.transforms;
  n.hidden = c.hidden;
  n.blocks = c.blocks;
  n.scale_clamp = c.scale_clamp;
  n.atoms = c.atoms;
  n.train = c.train;
  return n;
}

NreConfig nre_config(const RunConfig& c) {
  NreConfig n;
  n.embedding = c.embedding;
  n.hidden = c.hidden;
  n.blocks = c.blocks;
  n.contrasts = c.contrasts;
  n.train = c.train;
  return n;
}

MHConfig sampling_mh(const RunConfig& c, const BoxUniform& prior) {
  MHConfig m;
  m.pilot_steps = c.mh_pilot_steps;
  m.thin = c.mh_thin;
  m.main_steps = c.samples * c.mh_thin;
  m.pilot_sd = prior_scaled_sd(prior, c.pilot_fraction);
  return m;
}

nlohmann::json report_json(const std::vector<diff::TrainReport>& reports) {
  nlohmann::json a = nlohmann::json::array();
  for (const auto& r : reports) {
    a.push_back({{"epochs", r.epochs},
                 {"best_epoch", r.best_epoch},
                 {"best_validation_loss", r.best_validation_loss},
                 {"early_stopped", r.early_stopped}});
  }
  return a;
}

/// Row of `thetas` with the highest target value.
Vec best_start(const LogTarget& target, const Mat& thetas) {
  double best = -std::numeric_limits<double>::infinity();
  Vec out;
  for (Eigen::Index i = 0; i < thetas.rows(); ++i) {
    const Vec t = thetas.row(i).transpose();
    const double v = target(t);
    if (v > best) {
      best = v;
      out = t;
    }
  }
  if (out.size() == 0) throw std::runtime_error("no candidate start point has a finite posterior value");
  return out;
}

void stamp_blob(Blob& blob, const RunConfig& cfg, const BoxUniform& prior) {
  blob.config["run"] = {{"model", cfg.model},
                        {"method", cfg.method},
                        {"prior_lower", to_std(prior.lower())},
                        {"prior_upper", to_std(prior.upper())},
                        {"ratio_sampler", cfg.ratio_sampler},
                        {"sir_proposals_per_sample", cfg.sir_proposals_per_sample},
                        {"mh_pilot_steps", cfg.mh_pilot_steps},
                        {"mh_thin", cfg.mh_thin},
                        {"pilot_fraction", cfg.pilot_fraction}};
}

Mat sample_ratio(const RatioEstimator& nre, const RunConfig& cfg, const BoxUniform& prior, const Vec& features,
                 const Mat& start_candidates, Rng& rng, nlohmann::json& diag) {
  if (cfg.ratio_sampler == "sir") {
    return nre.sample_sir(cfg.samples, cfg.samples * cfg.sir_proposals_per_sample, features, rng);
  }
  const Vec theta0 = best_start(nre.posterior_target(features), start_candidates);
  const MHResult r = nre.sample_mh(features, sampling_mh(cfg, prior), theta0, rng);
  diag["sampler_pilot_acceptance"] = r.pilot_acceptance;
  diag["sampler_main_acceptance"] = r.main_acceptance;
  return r.samples;
}

}  // namespace

ModelSpec configured_model(const RunConfig& cfg) {
  ModelSpec m = make_model(cfg.model);
  if (cfg.prior_lower || cfg.prior_upper) {
    m.prior = std::make_shared<BoxUniform>(cfg.prior_lower.value_or(m.prior->lower()),
                                           cfg.prior_upper.value_or(m.prior->upper()));
  }
  return m;
}

TimeSeries table_to_series(const Table& t) {
  TimeSeries x;
  x.data = t.values;
  x.columns = t.header;
  return x;
}

Table series_to_table(const TimeSeries& x) {
  Table t;
  t.values = x.data;
  if (static_cast<Eigen::Index>(x.columns.size()) == x.dim()) {
    t.header = x.columns;
  } else {
    for (Eigen::Index j = 0; j < x.dim(); ++j) t.header.push_back("x_" + std::to_string(j));
  }
  return t;
}

TimeSeries load_or_simulate_observation(const RunConfig& cfg, const ModelSpec& model, Vec* generating_theta) {
  if (!cfg.observation_file.empty()) {
    TimeSeries y = table_to_series(read_table(cfg.observation_file));
    if (y.dim() != model.simulator->output_dim()) {
      throw ConfigError({"run.observation: file has " + std::to_string(y.dim()) + " columns, model '" + model.id +
                         "' produces " + std::to_string(model.simulator->output_dim())});
    }
    if (generating_theta) *generating_theta = cfg.theta_true.value_or(Vec());
    return y;
  }
  const Vec theta = cfg.theta_true.value_or(model.theta_star);
  if (generating_theta) *generating_theta = theta;
  Rng rng(named_seed(cfg.seed, "observation"));
  return model.simulator->simulate(theta, rng);
}

nlohmann::json run_pipeline(const RunConfig& cfg, RunStage stage) {
  validate_run_config(cfg);
  if (stage == RunStage::kTrain && !is_neural_method(cfg.method)) {
    throw ConfigError({"run.method: '" + cfg.method + "' has no training stage; use the run command"});
  }
  const ModelSpec model = configured_model(cfg);
  if (cfg.observation_file.empty() && !cfg.theta_true && model.theta_star.size() == 0) {
    throw ConfigError({"run.theta: model '" + cfg.model +
                       "' has no default generating parameter; set run.theta or run.observation"});
  }
  const BoxUniform& prior = *model.prior;
  Vec theta_gen;
  const TimeSeries obs = load_or_simulate_observation(cfg, model, &theta_gen);

  Artifacts art(cfg, stage == RunStage::kTrain ? "train" : "run");
  auto counted = std::make_shared<CountingSimulator>(model.simulator);
  auto pilot_counted = std::make_shared<CountingSimulator>(model.simulator);
  nlohmann::json diag;
  try {
    art.write("observation.csv", series_to_table(obs));
    const std::uint64_t method_seed = named_seed(cfg.seed, "method");
    const auto names = model.simulator->param_names();
    Mat samples;

    RoundSettings rs{cfg.rounds, cfg.sims_per_round, cfg.threads};
    if (cfg.method == "npe" || cfg.method == "snpe") {
      NeuralPosteriorEstimator npe(npe_config(cfg), model.prior, obs.dim(), obs.length(), derive_seed(method_seed, 0));
      const SequentialResult sr = snpe_rounds(npe, *counted, obs, rs, derive_seed(method_seed, 1));
      diag["training"] = report_json(sr.reports);
      Blob blob = npe.to_blob();
      stamp_blob(blob, cfg, prior);
      art.write("model.blob", blob);
      if (stage == RunStage::kSample) {
        Rng rng(derive_seed(method_seed, 2));
        samples = npe.sample(cfg.samples, npe.features(obs), rng);
      }
    } else if (cfg.method == "nre" || cfg.method == "snre") {
      RatioEstimator nre(nre_config(cfg), model.prior, obs.dim(), obs.length(), derive_seed(method_seed, 0));
      const SequentialResult sr = snre_rounds(nre, *counted, obs, rs, sampling_mh(cfg, prior), derive_seed(method_seed, 1));
      diag["training"] = report_json(sr.reports);
      Blob blob = nre.to_blob();
      stamp_blob(blob, cfg, prior);
      art.write("model.blob", blob);
      if (stage == RunStage::kSample) {
        Rng rng(derive_seed(method_seed, 2));
        samples = sample_ratio(nre, cfg, prior, nre.features(obs), sr.proposals.back(), rng, diag);
      }
    } else {
      Rng rng(derive_seed(method_seed, 0));
      SurrogateConfig sc;
      sc.kind = parse_surrogate_kind(cfg.method);
      sc.R = cfg.R;
      sc.pooled = cfg.pooled;
      sc.latent_noise_sd = cfg.latent_noise_sd;
      if (sc.kind == SurrogateKind::kAbc) {
        Rng pilot_rng(derive_seed(method_seed, 1));
        sc.abc_epsilon = abc_epsilon_from_pilot(obs, *pilot_counted, prior, cfg.abc_pilot, cfg.abc_quantile, pilot_rng);
        diag["abc_epsilon"] = sc.abc_epsilon;
      }
      const SurrogateLikelihood surrogate(sc, counted, obs);
      const StochasticLogLik loglik = [&](const Vec& theta, Rng& r) {
        try {
          return surrogate(theta, r);
        } catch (const std::domain_error&) {
          // A degenerate fit at a proposal only rejects that proposal.
          return -std::numeric_limits<double>::infinity();
        }
      };
      const Vec theta0 = theta_gen.size() == prior.dim() ? theta_gen : prior.mean();
      const MHResult r = pm_mh_budget(loglik, prior, cfg.simulations, cfg.R, theta0,
                                      prior_scaled_sd(prior, cfg.pilot_fraction), rng, cfg.samples, true);
      diag["pilot_acceptance"] = r.pilot_acceptance;
      diag["main_acceptance"] = r.main_acceptance;
      diag["warnings"] = r.warnings;
      art.write("chain.csv", chain_table(r.main, names));
      samples = r.samples;
    }

    if (stage == RunStage::kSample) {
      art.write("samples.csv", Table{theta_header(static_cast<std::size_t>(prior.dim()), names), samples});
      if (cfg.ground_truth) {
        MHConfig gm;
        gm.pilot_steps = cfg.gt_pilot_steps;
        gm.main_steps = cfg.gt_main_steps;
        gm.thin = cfg.gt_thin;
        gm.pilot_sd = prior_scaled_sd(prior, cfg.pilot_fraction);
        Rng grng(named_seed(cfg.seed, "ground_truth"));
        const Vec theta0 = theta_gen.size() == prior.dim() ? theta_gen : prior.mean();
        const MHResult gt = ground_truth_posterior(model, obs, gm, theta0, grng);
        diag["ground_truth_main_acceptance"] = gt.main_acceptance;
        art.write("ground_truth.csv", Table{theta_header(static_cast<std::size_t>(prior.dim()), names), gt.samples});
        nlohmann::json reports = nlohmann::json::array();
        for (const auto& rep : score_samples(gt.samples, samples, cfg.wasserstein_p, {cfg.seed})) reports.push_back(to_json(rep));
        art.write("metrics.json", reports.dump(2) + "\n");
      }
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    art.manifest()["simulation_calls"] = {{"method", counted->calls()}, {"abc_pilot", pilot_counted->calls()}};
    art.manifest()["diagnostics"] = diag;
    art.finish("failed", e.what());
    throw RunFailure(e.what());
  }
  art.manifest()["simulation_calls"] = {{"method", counted->calls()},
                                        {"expected", expected_method_calls(cfg)},
                                        {"abc_pilot", pilot_counted->calls()},
                                        {"observation", cfg.observation_file.empty() ? 1 : 0}};
  art.manifest()["diagnostics"] = diag;
  return art.finish("ok");
}

nlohmann::json run_sbc(const RunConfig& cfg) {
  validate_run_config(cfg);
  const ModelSpec model = configured_model(cfg);
  const BoxUniform& prior = *model.prior;
  if (cfg.method != "npe" && cfg.method != "nre") {
    const std::size_t per = is_neural_method(cfg.method) ? cfg.rounds * cfg.sims_per_round
                                                         : cfg.simulations + (cfg.method == "abc" ? cfg.abc_pilot : 0);
    const FunctionSampler refuse(cfg.method, [](std::size_t, const TimeSeries&, Rng&) { return Mat(); }, per);
    try {
      (void)sbc_run(prior, *model.simulator, refuse, SbcConfig{cfg.sbc_replicates, cfg.sbc_L, cfg.sbc_bins, 0});
    } catch (const std::invalid_argument& e) {
      throw ConfigError({std::string("run.method: ") + e.what()});
    }
  }
  if (cfg.rounds != 1) throw ConfigError({"budget.rounds: SBC trains an amortized estimator; set rounds = 1"});

  Artifacts art(cfg, "sbc");
  auto counted = std::make_shared<CountingSimulator>(model.simulator);
  nlohmann::json diag;
  try {
    const std::uint64_t method_seed = named_seed(cfg.seed, "method");
    // Amortized training only needs a reference observation for its shape.
    Rng shape_rng(named_seed(cfg.seed, "observation"));
    const TimeSeries ref = model.simulator->simulate(prior.sample(shape_rng), shape_rng);
    std::unique_ptr<PosteriorSampler> sampler;
    RoundSettings rs{1, cfg.sims_per_round, cfg.threads};
    if (cfg.method == "npe") {
      auto npe = std::make_shared<NeuralPosteriorEstimator>(npe_config(cfg), model.prior, ref.dim(), ref.length(),
                                                            derive_seed(method_seed, 0));
      const SequentialResult sr = snpe_rounds(*npe, *counted, ref, rs, derive_seed(method_seed, 1));
      diag["training"] = report_json(sr.reports);
      Blob blob = npe->to_blob();
      stamp_blob(blob, cfg, prior);
      art.write("model.blob", blob);
      sampler = std::make_unique<FlowSampler>(npe);
    } else {
      auto nre = std::make_shared<RatioEstimator>(nre_config(cfg), model.prior, ref.dim(), ref.length(),
                                                  derive_seed(method_seed, 0));
      const SequentialResult sr = snre_rounds(*nre, *counted, ref, rs, sampling_mh(cfg, prior), derive_seed(method_seed, 1));
      diag["training"] = report_json(sr.reports);
      Blob blob = nre->to_blob();
      stamp_blob(blob, cfg, prior);
      art.write("model.blob", blob);
      sampler = std::make_unique<RatioSirSampler>(nre, cfg.sir_proposals_per_sample);
    }
    const SbcResult res =
        sbc_run(prior, *model.simulator, *sampler, SbcConfig{cfg.sbc_replicates, cfg.sbc_L, cfg.sbc_bins, named_seed(cfg.seed, "sbc")});
    art.write("ranks.csv", ranks_csv(res.records));
    nlohmann::json hist = histogram_json(res.histogram, res.uniformity);
    hist["skipped"] = res.skipped;
    art.write("histogram.json", hist.dump(2) + "\n");
    diag["skipped_replicates"] = res.skipped.size();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    art.manifest()["simulation_calls"] = {{"method", counted->calls()}};
    art.manifest()["diagnostics"] = diag;
    art.finish("failed", e.what());
    throw RunFailure(e.what());
  }
  art.manifest()["simulation_calls"] = {{"method", counted->calls()}, {"expected", cfg.sims_per_round}};
  art.manifest()["diagnostics"] = diag;
  return art.finish("ok");
}

nlohmann::json reproduce(const std::string& manifest_path, const std::string& output_dir) {
  nlohmann::json original;
  try {
    original = nlohmann::json::parse(read_file(manifest_path));
  } catch (const std::exception& e) {
    throw ConfigError({"manifest '" + manifest_path + "': " + e.what()});
  }
  RunConfig cfg = parse_run_config(original.at("config").get<std::string>(), manifest_path);
  if (fs::weakly_canonical(output_dir) == fs::weakly_canonical(cfg.output_dir)) {
    throw ConfigError({"reproduce: output directory must differ from the original run's"});
  }
  cfg.output_dir = output_dir;
  const std::string command = original.at("command").get<std::string>();
  nlohmann::json rerun;
  if (command == "run") {
    rerun = run_pipeline(cfg, RunStage::kSample);
  } else if (command == "train") {
    rerun = run_pipeline(cfg, RunStage::kTrain);
  } else if (command == "sbc") {
    rerun = run_sbc(cfg);
  } else {
    throw ConfigError({"manifest: unknown command '" + command + "'"});
  }
  std::map<std::string, std::string> fresh;
  for (const auto& o : rerun.at("outputs")) fresh[o.at("file").get<std::string>()] = o.at("sha256").get<std::string>();
  nlohmann::json files = nlohmann::json::array();
  bool identical = true;
  for (const auto& o : original.at("outputs")) {
    const std::string name = o.at("file").get<std::string>();
    const std::string before = o.at("sha256").get<std::string>();
    const auto it = fresh.find(name);
    const bool same = it != fresh.end() && it->second == before;
    identical = identical && same;
    files.push_back({{"file", name}, {"original", before}, {"reproduced", it == fresh.end() ? "" : it->second}, {"identical", same}});
  }
  return {{"identical", identical}, {"files", files}};
}

Mat sample_saved_model(const std::string& blob_path, const std::string& observation_csv, std::size_t n,
                       std::uint64_t seed) {
  const Blob blob = read_blob(blob_path);
  if (!blob.config.contains("run")) throw std::invalid_argument("blob '" + blob_path + "' was not written by a pipeline run");
  const auto& run = blob.config.at("run");
  auto prior = std::make_shared<BoxUniform>(from_std(run.at("prior_lower").get<std::vector<double>>()),
                                            from_std(run.at("prior_upper").get<std::vector<double>>()));
  const TimeSeries y = table_to_series(read_table(observation_csv));
  Rng rng(seed);
  if (blob.kind == "npe") {
    const auto npe = NeuralPosteriorEstimator::from_blob(blob, prior);
    return npe->sample(n, npe->features(y), rng);
  }
  if (blob.kind == "nre") {
    const auto nre = RatioEstimator::from_blob(blob, prior);
    RunConfig cfg;
    cfg.samples = n;
    cfg.ratio_sampler = run.at("ratio_sampler").get<std::string>();
    cfg.sir_proposals_per_sample = run.at("sir_proposals_per_sample").get<std::size_t>();
    cfg.mh_pilot_steps = run.at("mh_pilot_steps").get<std::size_t>();
    cfg.mh_thin = run.at("mh_thin").get<std::size_t>();
    cfg.pilot_fraction = run.at("pilot_fraction").get<double>();
    nlohmann::json diag;
    const Mat starts = prior->sample_n(1000, rng);
    return sample_ratio(*nre, cfg, *prior, nre->features(y), starts, rng, diag);
  }
  throw std::invalid_argument("blob '" + blob_path + "' holds an unsupported model kind '" + blob.kind + "'");
}

nlohmann::json score_files(const std::string& reference_csv, const std::string& candidate_csv, double p,
                           std::vector<std::uint64_t> seeds) {
  const Table ref = read_table(reference_csv);
  const Table cand = read_table(candidate_csv);
  if (ref.values.cols() != cand.values.cols()) {
    throw ConfigError({"score: '" + reference_csv + "' has " + std::to_string(ref.values.cols()) + " columns but '" +
                       candidate_csv + "' has " + std::to_string(cand.values.cols())});
  }
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : score_samples(ref.values, cand.values, p, std::move(seeds))) out.push_back(to_json(r));
  return out;
}

}  // namespace nsbi
