#include "nsbi/cli/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <cstdio>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "nsbi/classic/surrogates.hpp"
#include "nsbi/io/csv.hpp"
#include "nsbi/simulators/models.hpp"

namespace nsbi {

namespace {

std::string join(const std::vector<std::string>& v, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? sep : "") + v[i];
  return out;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt_vec(const Vec& v) {
  std::string out;
  for (Eigen::Index i = 0; i < v.size(); ++i) out += (i ? "," : "") + fmt(v[i]);
  return out;
}

Vec to_vec(const std::vector<double>& v) { return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size())); }

template <class T>
T parse_integer(const std::string& s) {
  T v{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) throw std::invalid_argument("expected a non-negative integer");
  return v;
}

double parse_real(const std::string& s) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) throw std::invalid_argument("expected a number");
  return v;
}

bool parse_bool(const std::string& s) {
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw std::invalid_argument("expected true or false");
}

using Setter = std::function<void(RunConfig&, const std::string&)>;

std::map<std::string, Setter> setters() {
  std::map<std::string, Setter> s;
  auto size = [](std::size_t RunConfig::*f) {
    return Setter([f](RunConfig& c, const std::string& v) { c.*f = parse_integer<std::size_t>(v); });
  };
  auto real = [](double RunConfig::*f) { return Setter([f](RunConfig& c, const std::string& v) { c.*f = parse_real(v); }); };
  auto flag = [](bool RunConfig::*f) { return Setter([f](RunConfig& c, const std::string& v) { c.*f = parse_bool(v); }); };
  auto text = [](std::string RunConfig::*f) { return Setter([f](RunConfig& c, const std::string& v) { c.*f = v; }); };
  auto vec = [](std::optional<Vec> RunConfig::*f) {
    return Setter([f](RunConfig& c, const std::string& v) { c.*f = to_vec(parse_number_list(v)); });
  };

  s["run.model"] = text(&RunConfig::model);
  s["run.method"] = text(&RunConfig::method);
  s["run.seed"] = [](RunConfig& c, const std::string& v) { c.seed = parse_integer<std::uint64_t>(v); };
  s["run.output"] = text(&RunConfig::output_dir);
  s["run.threads"] = [](RunConfig& c, const std::string& v) { c.threads = parse_integer<unsigned>(v); };
  s["run.observation"] = text(&RunConfig::observation_file);
  s["run.theta"] = vec(&RunConfig::theta_true);
  s["budget.rounds"] = size(&RunConfig::rounds);
  s["budget.sims_per_round"] = size(&RunConfig::sims_per_round);
  s["budget.simulations"] = size(&RunConfig::simulations);
  s["budget.R"] = size(&RunConfig::R);
  s["prior.lower"] = vec(&RunConfig::prior_lower);
  s["prior.upper"] = vec(&RunConfig::prior_upper);
  s["network.embedding"] = [](RunConfig& c, const std::string& v) { c.embedding.kind = parse_embedding_kind(v); };
  s["network.embedding_hidden"] = [](RunConfig& c, const std::string& v) { c.embedding.hidden = parse_integer<std::size_t>(v); };
  s["network.embedding_layers"] = [](RunConfig& c, const std::string& v) { c.embedding.layers = parse_integer<std::size_t>(v); };
  s["network.embedding_output"] = [](RunConfig& c, const std::string& v) { c.embedding.output = parse_integer<std::size_t>(v); };
  s["network.transforms"] = size(&RunConfig::transforms);
  s["network.hidden"] = size(&RunConfig::hidden);
  s["network.blocks"] = size(&RunConfig::blocks);
  s["network.scale_clamp"] = real(&RunConfig::scale_clamp);
  s["network.atoms"] = size(&RunConfig::atoms);
  s["network.contrasts"] = size(&RunConfig::contrasts);
  s["train.batch_size"] = [](RunConfig& c, const std::string& v) { c.train.batch_size = parse_integer<std::size_t>(v); };
  s["train.lr"] = [](RunConfig& c, const std::string& v) { c.train.lr = parse_real(v); };
  s["train.validation_fraction"] = [](RunConfig& c, const std::string& v) { c.train.validation_fraction = parse_real(v); };
  s["train.patience"] = [](RunConfig& c, const std::string& v) { c.train.patience = parse_integer<std::size_t>(v); };
  s["train.max_epochs"] = [](RunConfig& c, const std::string& v) { c.train.max_epochs = parse_integer<std::size_t>(v); };
  s["sampling.samples"] = size(&RunConfig::samples);
  s["sampling.ratio_sampler"] = text(&RunConfig::ratio_sampler);
  s["sampling.sir_proposals_per_sample"] = size(&RunConfig::sir_proposals_per_sample);
  s["sampling.mh_pilot_steps"] = size(&RunConfig::mh_pilot_steps);
  s["sampling.mh_thin"] = size(&RunConfig::mh_thin);
  s["sampling.pilot_fraction"] = real(&RunConfig::pilot_fraction);
  s["classic.pooled"] = flag(&RunConfig::pooled);
  s["classic.abc_quantile"] = real(&RunConfig::abc_quantile);
  s["classic.abc_pilot"] = size(&RunConfig::abc_pilot);
  s["classic.latent_noise_sd"] = real(&RunConfig::latent_noise_sd);
  s["ground_truth.enabled"] = flag(&RunConfig::ground_truth);
  s["ground_truth.pilot_steps"] = size(&RunConfig::gt_pilot_steps);
  s["ground_truth.main_steps"] = size(&RunConfig::gt_main_steps);
  s["ground_truth.thin"] = size(&RunConfig::gt_thin);
  s["ground_truth.wasserstein_p"] = real(&RunConfig::wasserstein_p);
  s["sbc.replicates"] = size(&RunConfig::sbc_replicates);
  s["sbc.L"] = size(&RunConfig::sbc_L);
  s["sbc.bins"] = size(&RunConfig::sbc_bins);
  return s;
}

}  // namespace

ConfigError::ConfigError(const std::vector<std::string>& problems)
    : std::runtime_error("invalid configuration:\n  " + join(problems, "\n  ")), problems_(problems) {}

bool is_neural_method(const std::string& method) {
  return method == "npe" || method == "snpe" || method == "nre" || method == "snre";
}

bool is_sequential_method(const std::string& method) { return method == "snpe" || method == "snre"; }

std::vector<double> parse_number_list(const std::string& text) {
  std::vector<double> out;
  std::string cell;
  std::istringstream in(text);
  while (std::getline(in, cell, ',')) {
    const auto b = cell.find_first_not_of(" \t");
    const auto e = cell.find_last_not_of(" \t");
    if (b == std::string::npos) throw std::invalid_argument("empty entry in number list");
    out.push_back(parse_real(cell.substr(b, e - b + 1)));
  }
  if (out.empty()) throw std::invalid_argument("empty number list");
  return out;
}

RunConfig parse_run_config(const std::string& ini_text, const std::string& source) {
  boost::property_tree::ptree tree;
  std::istringstream in(ini_text);
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError({source + ":" + std::to_string(e.line()) + ": " + e.message()});
  }
  const auto table = setters();
  RunConfig cfg;
  std::vector<std::string> problems;
  for (const auto& [section, keys] : tree) {
    if (keys.empty() && !keys.data().empty()) {
      problems.push_back(section + ": key outside any section");
      continue;
    }
    for (const auto& [key, value] : keys) {
      const std::string field = section + "." + key;
      const auto it = table.find(field);
      if (it == table.end()) {
        problems.push_back(field + ": unknown setting");
        continue;
      }
      try {
        it->second(cfg, value.data());
      } catch (const std::exception& e) {
        problems.push_back(field + " = '" + value.data() + "': " + e.what());
      }
    }
  }
  try {
    validate_run_config(cfg);
  } catch (const ConfigError& e) {
    problems.insert(problems.end(), e.problems().begin(), e.problems().end());
  }
  if (!problems.empty()) throw ConfigError(problems);
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const std::exception& e) {
    throw ConfigError({e.what()});
  }
  return parse_run_config(text, path);
}

std::string format_run_config(const RunConfig& c) {
  std::ostringstream o;
  o << "[run]\nmodel = " << c.model << "\nmethod = " << c.method << "\nseed = " << c.seed << "\noutput = " << c.output_dir
    << "\nthreads = " << c.threads << "\n";
  if (!c.observation_file.empty()) o << "observation = " << c.observation_file << "\n";
  if (c.theta_true) o << "theta = " << fmt_vec(*c.theta_true) << "\n";
  o << "\n[budget]\nrounds = " << c.rounds << "\nsims_per_round = " << c.sims_per_round
    << "\nsimulations = " << c.simulations << "\nR = " << c.R << "\n";
  if (c.prior_lower || c.prior_upper) {
    o << "\n[prior]\n";
    if (c.prior_lower) o << "lower = " << fmt_vec(*c.prior_lower) << "\n";
    if (c.prior_upper) o << "upper = " << fmt_vec(*c.prior_upper) << "\n";
  }
  o << "\n[network]\nembedding = " << embedding_kind_name(c.embedding.kind) << "\nembedding_hidden = " << c.embedding.hidden
    << "\nembedding_layers = " << c.embedding.layers << "\nembedding_output = " << c.embedding.output
    << "\ntransforms = " << c.transforms << "\nhidden = " << c.hidden << "\nblocks = " << c.blocks
    << "\nscale_clamp = " << fmt(c.scale_clamp) << "\natoms = " << c.atoms << "\ncontrasts = " << c.contrasts << "\n";
  o << "\n[train]\nbatch_size = " << c.train.batch_size << "\nlr = " << fmt(c.train.lr)
    << "\nvalidation_fraction = " << fmt(c.train.validation_fraction) << "\npatience = " << c.train.patience
    << "\nmax_epochs = " << c.train.max_epochs << "\n";
  o << "\n[sampling]\nsamples = " << c.samples << "\nratio_sampler = " << c.ratio_sampler
    << "\nsir_proposals_per_sample = " << c.sir_proposals_per_sample << "\nmh_pilot_steps = " << c.mh_pilot_steps
    << "\nmh_thin = " << c.mh_thin << "\npilot_fraction = " << fmt(c.pilot_fraction) << "\n";
  o << "\n[classic]\npooled = " << (c.pooled ? "true" : "false") << "\nabc_quantile = " << fmt(c.abc_quantile)
    << "\nabc_pilot = " << c.abc_pilot << "\nlatent_noise_sd = " << fmt(c.latent_noise_sd) << "\n";
  o << "\n[ground_truth]\nenabled = " << (c.ground_truth ? "true" : "false") << "\npilot_steps = " << c.gt_pilot_steps
    << "\nmain_steps = " << c.gt_main_steps << "\nthin = " << c.gt_thin << "\nwasserstein_p = " << fmt(c.wasserstein_p)
    << "\n";
  o << "\n[sbc]\nreplicates = " << c.sbc_replicates << "\nL = " << c.sbc_L << "\nbins = " << c.sbc_bins << "\n";
  return o.str();
}

void validate_run_config(const RunConfig& c) {
  std::vector<std::string> p;
  const auto ids = model_ids();
  const bool known_model = std::find(ids.begin(), ids.end(), c.model) != ids.end();
  if (!known_model) p.push_back("run.model: unknown model '" + c.model + "' (expected " + join(ids, ", ") + ")");
  if (std::find(kMethods.begin(), kMethods.end(), c.method) == kMethods.end()) {
    p.push_back("run.method: unknown method '" + c.method + "' (expected " + join(kMethods, ", ") + ")");
  }
  if (c.threads == 0) p.push_back("run.threads: must be >= 1");
  if (c.output_dir.empty()) p.push_back("run.output: must not be empty");

  if (is_neural_method(c.method)) {
    if (c.sims_per_round == 0) p.push_back("budget.sims_per_round: must be positive");
    if (c.rounds == 0) p.push_back("budget.rounds: must be positive");
    if (!is_sequential_method(c.method) && c.rounds != 1) {
      p.push_back("budget.rounds: method '" + c.method + "' is amortized and trains in a single round; set rounds = 1");
    }
    if (c.transforms == 0 || c.hidden == 0) p.push_back("network: transforms and hidden must be positive");
    if (c.train.batch_size < 2) p.push_back("train.batch_size: must be >= 2");
    if (!(c.train.lr > 0.0)) p.push_back("train.lr: must be positive");
    if (!(c.train.validation_fraction > 0.0 && c.train.validation_fraction < 1.0)) {
      p.push_back("train.validation_fraction: must lie in (0, 1)");
    }
    if (c.train.max_epochs == 0) p.push_back("train.max_epochs: must be positive");
    if (c.contrasts == 0) p.push_back("network.contrasts: must be positive");
    if (c.ratio_sampler != "mh" && c.ratio_sampler != "sir") p.push_back("sampling.ratio_sampler: expected mh or sir");
    if (c.mh_thin == 0) p.push_back("sampling.mh_thin: must be positive");
  } else {
    if (c.simulations == 0) p.push_back("budget.simulations: must be positive");
    if (c.R == 0) p.push_back("budget.R: must be >= 1");
    if (c.simulations > 0 && c.R > 0 && c.simulations % c.R != 0) {
      p.push_back("budget.simulations: must be a multiple of R = " + std::to_string(c.R));
    }
    if (c.simulations > 0 && c.R > 0) {
      try {
        (void)split_budget(c.simulations, c.R, c.samples);
      } catch (const std::exception& e) {
        p.push_back(std::string("budget.simulations: ") + e.what());
      }
    }
    if (c.method == "abc" && !(c.abc_quantile > 0.0 && c.abc_quantile <= 1.0)) p.push_back("classic.abc_quantile: must lie in (0, 1]");
    if (c.method == "abc" && c.abc_pilot == 0) p.push_back("classic.abc_pilot: must be positive");
    if (c.method == "latent" && !(c.latent_noise_sd > 0.0)) p.push_back("classic.latent_noise_sd: must be positive");
  }
  if (c.samples == 0) p.push_back("sampling.samples: must be positive");
  if (!(c.pilot_fraction > 0.0)) p.push_back("sampling.pilot_fraction: must be positive");
  if (!(c.wasserstein_p >= 1.0)) p.push_back("ground_truth.wasserstein_p: must be >= 1");
  if (c.gt_thin == 0) p.push_back("ground_truth.thin: must be positive");

  if (known_model) {
    const ModelSpec m = make_model(c.model);
    const Eigen::Index d = m.prior->dim();
    auto check_dim = [&](const std::optional<Vec>& v, const std::string& field) {
      if (v && v->size() != d) {
        p.push_back(field + ": has " + std::to_string(v->size()) + " entries, model '" + c.model + "' has " +
                    std::to_string(d) + " parameters");
      }
    };
    check_dim(c.prior_lower, "prior.lower");
    check_dim(c.prior_upper, "prior.upper");
    check_dim(c.theta_true, "run.theta");
    const Vec lo = c.prior_lower.value_or(m.prior->lower());
    const Vec hi = c.prior_upper.value_or(m.prior->upper());
    if (lo.size() == hi.size() && !(lo.array() < hi.array()).all()) p.push_back("prior: every lower bound must be below its upper bound");
    if (c.ground_truth && !m.exact_loglik) {
      p.push_back("ground_truth.enabled: model '" + c.model + "' has no tractable likelihood");
    }
  }
  if (!p.empty()) throw ConfigError(p);
}

std::size_t expected_method_calls(const RunConfig& c) {
  if (is_neural_method(c.method)) return c.rounds * c.sims_per_round;
  return c.simulations;
}

}  // namespace nsbi
