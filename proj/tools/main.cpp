#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "jumpcons/conditions.hpp"
#include "jumpcons/errors.hpp"
#include "jumpcons/experiment.hpp"
#include "jumpcons/inference.hpp"
#include "jumpcons/likelihood.hpp"
#include "jumpcons/parallel.hpp"
#include "jumpcons/priors.hpp"
#include "jumpcons/rng.hpp"
#include "jumpcons/serialization.hpp"
#include "jumpcons/simulator.hpp"

namespace fs = std::filesystem;
using namespace jumpcons;

namespace {

struct Globals {
  std::uint64_t seed = 1;
  bool seed_given = false;
  std::string config;
  std::string out;
  unsigned threads = 0;
};

// Writes to --out when given, stdout otherwise.
void emit(const Globals& g, const std::string& text) {
  if (g.out.empty()) {
    std::cout << text;
  } else {
    write_text_file(g.out, text);
  }
}

std::string require_path(const std::string& positional, const std::string& fallback, const char* what) {
  if (!positional.empty()) return positional;
  if (!fallback.empty()) return fallback;
  throw UsageError(std::string("missing ") + what + " (pass it as an argument or with --config)");
}

Vector parse_point(const std::vector<double>& values, int d, const char* what) {
  if (values.empty()) return Vector::Zero(d);
  if (static_cast<int>(values.size()) != d) {
    throw InputError(std::string(what) + " has " + std::to_string(values.size()) + " entries, model has d=" +
                     std::to_string(d));
  }
  return Eigen::Map<const Vector>(values.data(), d);
}

JumpDiffusionModel load_full_model(const std::string& path) {
  ModelFile file = load_model_file(path);
  if (!file.model) throw InputError(path + ": a full drift specification is required here, not a linear drift");
  return *file.model;
}

int cmd_check(const Globals& g, const std::string& model_path, int grid, int probes) {
  const ModelFile file = load_model_file(require_path(model_path, g.config, "model file"));
  const ConditionReport report = file.model ? check_conditions(*file.model, grid, probes, g.seed)
                                            : check_conditions(*file.drift, file.levy, grid, probes, g.seed);
  const int d = file.domain.d;
  const SigmaField identity{[d](const Vector&) { return Matrix::Identity(d, d); }, {}};
  const LampertiReport lamperti = check_lamperti(identity, file.domain, std::max(grid, 2));
  const bool ok = report.ok() && lamperti.satisfied;
  const Json out{{"ok", ok}, {"conditions", condition_report_to_json(report)},
                 {"lamperti", lamperti_report_to_json(lamperti)}};
  emit(g, out.dump(2) + "\n");
  if (!g.out.empty()) std::cout << out.dump(2) << "\n";
  const std::pair<const char*, const ConstantEstimate*> named[] = {
      {"C1", &report.c1}, {"C2", &report.c2}, {"C3", &report.c3}, {"C4", &report.c4}, {"C5", &report.c5}};
  for (const auto& [name, est] : named) {
    if (!est->violated) continue;
    std::cerr << "violation " << name << ": " << est->note;
    if (!est->witnesses.empty()) {
      std::cerr << " witness [";
      for (int i = 0; i < est->witnesses.front().size(); ++i) {
        std::cerr << (i ? ", " : "") << format_double(est->witnesses.front()(i));
      }
      std::cerr << "]";
    }
    std::cerr << "\n";
  }
  return ok ? 0 : static_cast<int>(ExitCode::kDomainViolation);
}

int cmd_simulate(const Globals& g, const std::string& model_path, double horizon, std::optional<double> dt,
                 const std::vector<double>& x0, std::size_t observations, double delta, double burn_in) {
  const JumpDiffusionModel model = load_full_model(require_path(model_path, g.config, "model file"));
  const std::string hash = model_hash(model);
  if (observations > 0) {
    const double step = dt.value_or(default_dt(delta));
    const ObservationInit init =
        x0.empty() ? ObservationInit{StationaryInit{burn_in}} : ObservationInit{parse_point(x0, model.dim(), "--x0")};
    const ObservationSeries series = sample_observations(model, observations, delta, step, g.seed, init);
    emit(g, observations_to_csv(series, hash, step, g.seed));
    return 0;
  }
  const double step = dt.value_or(default_dt(horizon));
  const PathSkeleton path = simulate_path(model, parse_point(x0, model.dim(), "--x0"), horizon, step, g.seed);
  emit(g, path_to_csv(path, hash));
  return 0;
}

struct PriorFile {
  DomainSpec domain;
  GaussianPriorConfig drift;
  DPMixConfig levy;
};

PriorFile load_prior_file(const std::string& path) {
  const Json j = read_json_file(path);
  require_keys(j, {"domain", "drift_prior", "levy_prior"}, "prior config");
  if (!j.contains("domain")) throw InputError("prior config: missing key 'domain'");
  PriorFile p;
  p.domain = domain_from_json(j.at("domain"));
  p.drift = gaussian_prior_from_json(j.value("drift_prior", Json::object()), p.domain);
  p.levy = dpmix_from_json(j.value("levy_prior", Json::object()));
  return p;
}

int cmd_sample_prior(const Globals& g, std::size_t count) {
  const PriorFile prior = load_prior_file(require_path("", g.config, "prior config"));
  if (count == 0) throw InputError("--count must be >= 1");
  if (count > 1 && g.out.empty()) throw UsageError("--out <directory> is required when --count > 1");
  for (std::size_t i = 0; i < count; ++i) {
    const std::uint64_t seed = derive_seed(g.seed, {i});
    const JumpDiffusionModel model(sample_drift_prior(prior.drift, seed),
                                   sample_levy_prior(prior.levy, prior.domain, seed));
    const std::string text = model_to_json(model).dump(2) + "\n";
    if (count == 1) {
      emit(g, text);
    } else {
      char name[32];
      std::snprintf(name, sizeof(name), "model_%05zu.json", i);
      write_text_file(fs::path(g.out) / name, text);
    }
  }
  return 0;
}

int cmd_klbound(const Globals& g, const std::string& truth_path, const std::string& candidate_path,
                std::size_t samples, double burn_in, double thin, double dt) {
  const JumpDiffusionModel truth = load_full_model(truth_path);
  const JumpDiffusionModel candidate = load_full_model(candidate_path);
  const double burn = burn_in > 0.0 ? burn_in : recommended_burn_in(truth);
  const StationarySamples stationary = sample_stationary(truth, burn, thin, samples, dt, g.seed);
  if (stationary.warning) std::cerr << "warning: " << *stationary.warning << "\n";
  const KLBoundTerms terms = kl_upper_bound(truth, candidate, stationary.points);
  Json out = kl_terms_to_json(terms);
  out["path_kl_rate"] = path_kl_rate(truth, candidate, stationary.points);
  out["samples"] = samples;
  emit(g, out.dump(2) + "\n");
  return 0;
}

int cmd_infer(const Globals& g, const std::string& data_override) {
  const Json j = read_json_file(require_path("", g.config, "inference config"));
  require_keys(j,
               {"domain", "data", "drift_prior", "levy_prior", "estimator", "sampler", "iterations", "warmup", "init"},
               "infer config");
  if (!j.contains("domain")) throw InputError("infer config: missing key 'domain'");
  const DomainSpec domain = domain_from_json(j.at("domain"));
  std::string data_path = data_override;
  if (data_path.empty()) {
    if (!j.contains("data")) throw InputError("infer config: missing key 'data'");
    data_path = j.at("data").get<std::string>();
  }
  const ObservationSeries data = load_observations(data_path);
  const PriorConfigs priors{gaussian_prior_from_json(j.value("drift_prior", Json::object()), domain),
                            dpmix_from_json(j.value("levy_prior", Json::object()))};
  const EstimatorConfig estimator = estimator_from_json(j.value("estimator", Json::object()));
  const ProposalConfig sampler = proposal_from_json(j.value("sampler", Json::object()));
  const auto iterations = j.value<std::size_t>("iterations", 2000);
  const auto warmup = j.value<std::size_t>("warmup", 500);
  std::optional<JumpDiffusionModel> init;
  if (j.contains("init")) init = model_from_json(j.at("init"));
  const Chain chain = run_chain(data, priors, estimator, sampler, iterations, warmup, g.seed, init);
  const fs::path dir = g.out.empty() ? fs::path("infer_out") : fs::path(g.out);
  write_text_file(dir / "chain.jsonl", chain_to_jsonl(chain));
  write_text_file(dir / "summary.json", chain_summary_to_json(chain).dump(2) + "\n");
  std::cout << chain_summary_to_json(chain).dump(2) << "\n";
  if (chain.tuning_failure) {
    for (const auto& msg : chain.diagnostics) std::cerr << "diagnostic: " << msg << "\n";
  }
  return 0;
}

int cmd_experiment(const Globals& g) {
  ExperimentConfig cfg = experiment_config_from_json(read_json_file(require_path("", g.config, "experiment config")));
  if (!g.out.empty()) cfg.output_dir = g.out;
  if (g.seed_given) cfg.seed = g.seed;
  const ExperimentResult result = run_experiment(cfg);
  for (const auto& row : result.rows) {
    std::cout << "n=" << row.n << " median_distance=" << format_double(row.summary.median_distance)
              << " stderr=" << format_double(row.summary.median_stderr)
              << " mass_outside=" << format_double(row.summary.mass_outside) << "\n";
  }
  std::cout << "wrote " << (cfg.output_dir / "manifest.json").string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Jump-diffusion simulation, priors, Girsanov bounds and posterior contraction"};
  app.set_version_flag("--version", std::string(version()));
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  auto* seed_opt = app.add_option("--seed", g.seed, "Master seed")->capture_default_str();
  app.add_option("--config", g.config, "Config or model file");
  app.add_option("--out", g.out, "Output file or directory");
  app.add_option("--threads", g.threads, "Worker threads (0 = hardware concurrency)");

  std::string model_path;
  int grid = 16;
  int probes = 200;
  auto* check = app.add_subcommand("check", "Check regularity conditions of a model file");
  check->add_option("model", model_path, "Model JSON file");
  check->add_option("--grid", grid, "Grid resolution per axis")->capture_default_str();
  check->add_option("--probes", probes, "Random probe pairs")->capture_default_str();

  double horizon = 1.0;
  std::optional<double> dt;
  std::vector<double> x0;
  std::size_t observations = 0;
  double delta = 0.5;
  double burn_in = 0.0;
  auto* simulate = app.add_subcommand("simulate", "Simulate a path or an observation series to CSV");
  simulate->add_option("model", model_path, "Model JSON file");
  simulate->add_option("--horizon", horizon, "Path horizon")->capture_default_str();
  simulate->add_option("--dt", dt, "Euler step (default 1e-3 min(1, horizon or delta))");
  simulate->add_option("--x0", x0, "Start point (default origin; stationary for observations)");
  simulate->add_option("--observations", observations, "Emit n observations every delta instead of a path");
  simulate->add_option("--delta", delta, "Observation spacing")->capture_default_str();
  simulate->add_option("--burn-in", burn_in, "Burn-in before the first observation (0 = heuristic)");

  std::size_t count = 1;
  auto* sample_prior = app.add_subcommand("sample-prior", "Draw models from the drift and Levy priors");
  sample_prior->add_option("--count", count, "Number of draws")->capture_default_str();

  std::string truth_path;
  std::string candidate_path;
  std::size_t samples = 1000;
  double thin = 0.5;
  double kl_dt = 0.01;
  auto* klbound = app.add_subcommand("klbound", "KL upper bound between two models");
  klbound->add_option("truth", truth_path, "Truth model JSON")->required();
  klbound->add_option("candidate", candidate_path, "Candidate model JSON")->required();
  klbound->add_option("--samples", samples, "Stationary samples")->capture_default_str();
  klbound->add_option("--burn-in", burn_in, "Burn-in (0 = heuristic)");
  klbound->add_option("--thin", thin, "Time between stationary samples")->capture_default_str();
  klbound->add_option("--dt", kl_dt, "Euler step")->capture_default_str();

  std::string data_path;
  auto* infer = app.add_subcommand("infer", "Run the posterior sampler on an observation CSV");
  infer->add_option("--data", data_path, "Observation CSV (overrides the config)");

  auto* experiment = app.add_subcommand("experiment", "Run the contraction experiment");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(ExitCode::kInputError);
  }
  g.seed_given = seed_opt->count() > 0;

  try {
    set_thread_count(g.threads);
    if (check->parsed()) return cmd_check(g, model_path, grid, probes);
    if (simulate->parsed()) return cmd_simulate(g, model_path, horizon, dt, x0, observations, delta, burn_in);
    if (sample_prior->parsed()) return cmd_sample_prior(g, count);
    if (klbound->parsed()) return cmd_klbound(g, truth_path, candidate_path, samples, burn_in, thin, kl_dt);
    if (infer->parsed()) return cmd_infer(g, data_path);
    if (experiment->parsed()) return cmd_experiment(g);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(e.exit_code());
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(ExitCode::kInputError);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(ExitCode::kNumericFailure);
  }
  return static_cast<int>(ExitCode::kInputError);
}
