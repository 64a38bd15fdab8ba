#include <doctest.h>

#include <filesystem>
#include <map>

#include <json.hpp>

#include "nsbi/cli/config.hpp"
#include "nsbi/cli/pipeline.hpp"
#include "nsbi/io/csv.hpp"

using namespace nsbi;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "nsbi_cli_test" / name;
  fs::remove_all(p);
  return p;
}

std::map<std::string, std::string> output_hashes(const nlohmann::json& manifest) {
  std::map<std::string, std::string> out;
  for (const auto& o : manifest.at("outputs")) out[o.at("file").get<std::string>()] = o.at("sha256").get<std::string>();
  return out;
}

RunConfig quick_neural(const std::string& model, const std::string& method, std::uint64_t seed, const fs::path& out) {
  RunConfig cfg;
  cfg.model = model;
  cfg.method = method;
  cfg.seed = seed;
  cfg.output_dir = out.string();
  cfg.rounds = 1;
  cfg.sims_per_round = 200;
  cfg.train.max_epochs = 3;
  cfg.samples = 200;
  cfg.mh_pilot_steps = 2000;
  cfg.mh_thin = 5;
  return cfg;
}

bool mentions(const ConfigError& e, const std::string& text) {
  for (const auto& p : e.problems())
    if (p.find(text) != std::string::npos) return true;
  return false;
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("config text round trips") {
    const std::string text = R"([run]
model = mvgbm
method = nre
seed = 17
output = somewhere
theta = 0.1, -0.2, 0.3

[budget]
rounds = 1
sims_per_round = 1000

[network]
embedding = gru
contrasts = 5

[train]
lr = 0.001

[sampling]
ratio_sampler = sir
)";
    const RunConfig a = parse_run_config(text);
    CHECK(a.model == "mvgbm");
    CHECK(a.seed == 17);
    CHECK(a.embedding.kind == EmbeddingKind::kGru);
    CHECK(a.contrasts == 5);
    CHECK(a.train.lr == 0.001);
    REQUIRE(a.theta_true.has_value());
    CHECK((*a.theta_true)[1] == -0.2);
    const std::string canonical = format_run_config(a);
    CHECK(format_run_config(parse_run_config(canonical)) == canonical);
  }

  TEST_CASE("every offending field is reported") {
    try {
      (void)parse_run_config("[run]\nmodel = nope\nmethod = kde\nbogus = 1\n[budget]\nR = 0\n[train]\nlr = fast\n");
      FAIL("expected a ConfigError");
    } catch (const ConfigError& e) {
      CHECK(mentions(e, "run.model"));
      CHECK(mentions(e, "run.bogus"));
      CHECK(mentions(e, "budget.R"));
      CHECK(mentions(e, "train.lr"));
    }
  }

  TEST_CASE("semantic validation") {
    RunConfig amortized;
    amortized.method = "npe";
    amortized.rounds = 10;
    CHECK_THROWS_AS(validate_run_config(amortized), ConfigError);

    RunConfig split;
    split.method = "kde";
    split.simulations = 10001;
    split.R = 2;
    CHECK_THROWS_AS(validate_run_config(split), ConfigError);

    RunConfig fw;
    fw.model = "fw";
    fw.method = "npe";
    fw.rounds = 1;
    CHECK_NOTHROW(validate_run_config(fw));
    fw.theta_true = Vec::Constant(3, 1.0);
    fw.theta_true.value()[0] = 1000.0;
    CHECK_NOTHROW(validate_run_config(fw));
    fw.ground_truth = true;
    CHECK_THROWS_AS(validate_run_config(fw), ConfigError);

    RunConfig prior;
    prior.model = "mvgbm";
    prior.method = "kde";
    prior.prior_lower = Vec::Constant(3, 1.0);
    prior.prior_upper = Vec::Constant(3, -1.0);
    CHECK_THROWS_AS(validate_run_config(prior), ConfigError);
  }

  TEST_CASE("budget accounting rules") {
    RunConfig snpe;
    snpe.model = "bh1";
    snpe.method = "snpe";
    CHECK(expected_method_calls(snpe) == 10000);
    RunConfig kde;
    kde.model = "mvgbm";
    kde.method = "kde";
    kde.simulations = 1000000;
    CHECK_NOTHROW(validate_run_config(kde));
    CHECK(expected_method_calls(kde) == 1000000);
  }

  TEST_CASE("sequential run records exactly its simulator calls") {
    RunConfig cfg;
    cfg.model = "bh1";
    cfg.method = "snpe";
    cfg.output_dir = scratch("snpe_bh1").string();
    cfg.rounds = 10;
    cfg.sims_per_round = 1000;
    cfg.hidden = 10;
    cfg.transforms = 2;
    cfg.train.max_epochs = 1;
    cfg.samples = 100;
    const nlohmann::json m = run_pipeline(cfg);
    CHECK(m.at("status") == "ok");
    CHECK(m.at("simulation_calls").at("method").get<std::size_t>() == 10000);
    CHECK(m.at("simulation_calls").at("expected").get<std::size_t>() == 10000);
    const nlohmann::json on_disk = nlohmann::json::parse(read_file(cfg.output_dir + "/manifest.json"));
    CHECK(on_disk == m);
    CHECK(on_disk.at("config").get<std::string>() == format_run_config(cfg));
  }

  TEST_CASE("classic run spends its budget and writes the chain") {
    RunConfig cfg;
    cfg.model = "mvgbm";
    cfg.method = "parametric";
    cfg.simulations = 12000;
    cfg.R = 2;
    cfg.samples = 100;
    cfg.output_dir = scratch("parametric").string();
    const nlohmann::json m = run_pipeline(cfg);
    CHECK(m.at("simulation_calls").at("method").get<std::size_t>() == 12000);
    const Table chain = read_table(cfg.output_dir + "/chain.csv");
    CHECK(chain.header.front() == "iteration");
    CHECK(chain.header.back() == "accepted");
    CHECK(read_table(cfg.output_dir + "/samples.csv").values.rows() == 100);
  }

  TEST_CASE("seeds determine the outputs") {
    const auto a = output_hashes(run_pipeline(quick_neural("mvgbm", "npe", 1, scratch("seed_a"))));
    const auto b = output_hashes(run_pipeline(quick_neural("mvgbm", "npe", 1, scratch("seed_b"))));
    const auto c = output_hashes(run_pipeline(quick_neural("mvgbm", "npe", 2, scratch("seed_c"))));
    CHECK(a.at("samples.csv") == b.at("samples.csv"));
    CHECK(a.at("model.blob") == b.at("model.blob"));
    CHECK(a.at("samples.csv") != c.at("samples.csv"));
  }

  TEST_CASE("reproduce reruns a manifest") {
    const fs::path dir = scratch("repro");
    (void)run_pipeline(quick_neural("bh2", "nre", 4, dir));
    const nlohmann::json r = reproduce((dir / "manifest.json").string(), scratch("repro_again").string());
    CHECK(r.at("identical").get<bool>());
    CHECK_THROWS_AS((void)reproduce((dir / "manifest.json").string(), dir.string()), ConfigError);
  }

  TEST_CASE("ratio run with ground truth emits both metrics") {
    RunConfig cfg = quick_neural("mvgbm", "snre", 5, scratch("snre"));
    cfg.rounds = 2;
    cfg.ground_truth = true;
    cfg.gt_pilot_steps = 2000;
    cfg.gt_main_steps = 20000;
    cfg.gt_thin = 20;
    const nlohmann::json m = run_pipeline(cfg);
    CHECK(m.at("simulation_calls").at("method").get<std::size_t>() == 400);
    const auto metrics = nlohmann::json::parse(read_file(cfg.output_dir + "/metrics.json"));
    std::map<std::string, double> values;
    for (const auto& r : metrics) values[r.at("metric").get<std::string>()] = r.at("value").get<double>();
    CHECK(values.count("wasserstein") == 1);
    CHECK(values.count("mmd") == 1);
    CHECK(std::isfinite(values["wasserstein"]));
  }

  TEST_CASE("saved models can be sampled again") {
    const fs::path dir = scratch("saved");
    (void)run_pipeline(quick_neural("mvgbm", "npe", 6, dir), RunStage::kTrain);
    const Mat s = sample_saved_model((dir / "model.blob").string(), (dir / "observation.csv").string(), 50, 7);
    CHECK(s.rows() == 50);
    CHECK(s.cols() == 3);
  }

  TEST_CASE("score compares sample files") {
    const fs::path dir = scratch("score");
    fs::create_directories(dir);
    Table a{{"x", "y"}, Mat::Random(30, 2)};
    write_table((dir / "a.csv").string(), a);
    write_table((dir / "b.csv").string(), Table{{"x"}, Mat::Random(30, 1)});
    const auto same = score_files((dir / "a.csv").string(), (dir / "a.csv").string(), 2.0);
    CHECK(same.at(0).at("metric") == "wasserstein");
    CHECK(same.at(0).at("value").get<double>() == doctest::Approx(0.0).epsilon(1e-12));
    CHECK_THROWS_AS((void)score_files((dir / "a.csv").string(), (dir / "b.csv").string(), 2.0), ConfigError);
  }

  TEST_CASE("mid-run failure leaves a failure manifest") {
    RunConfig cfg = quick_neural("mvgbm", "npe", 8, scratch("failure"));
    cfg.train.lr = 1e12;
    cfg.train.max_epochs = 20;
    CHECK_THROWS_AS((void)run_pipeline(cfg), RunFailure);
    const auto m = nlohmann::json::parse(read_file(cfg.output_dir + "/manifest.json"));
    CHECK(m.at("status") == "failed");
    CHECK(m.contains("error"));
    CHECK(fs::exists(cfg.output_dir + "/observation.csv"));
  }

  TEST_CASE("emitted tables parse back") {
    const fs::path dir = scratch("tables");
    (void)run_pipeline(quick_neural("bh1", "npe", 9, dir));
    for (const char* f : {"observation.csv", "samples.csv"}) {
      const std::string text = read_file((dir / f).string());
      CHECK(format_table(parse_table(text)) == text);
    }
  }

  TEST_CASE("sbc refuses simulation-based methods") {
    RunConfig cfg;
    cfg.model = "mvgbm";
    cfg.method = "kde";
    cfg.output_dir = scratch("sbc_kde").string();
    CHECK_THROWS_AS((void)run_sbc(cfg), ConfigError);
  }

  TEST_CASE("fw needs a generating parameter only when it must simulate an observation") {
    RunConfig run = quick_neural("fw", "npe", 10, scratch("fw_run"));
    CHECK_THROWS_AS((void)run_pipeline(run), ConfigError);

    RunConfig sbc = quick_neural("fw", "npe", 10, scratch("fw_sbc"));
    sbc.sbc_replicates = 20;
    sbc.sbc_L = 9;
    sbc.sbc_bins = 2;
    const auto m = run_sbc(sbc);
    CHECK(m.at("status") == "ok");
  }
}
