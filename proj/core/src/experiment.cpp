#include "jumpcons/experiment.hpp"

#include <string>

#include "jumpcons/errors.hpp"
#include "jumpcons/rng.hpp"

#ifndef JUMPCONS_VERSION
#define JUMPCONS_VERSION "unknown"
#endif

namespace jumpcons {

const char* version() { return JUMPCONS_VERSION; }

namespace {

template <class Fn>
auto run_stage(const std::string& stage, Fn&& fn) {
  try {
    return fn();
  } catch (const DomainViolation& e) {
    throw DomainViolation(stage + ": " + e.what());
  } catch (const NumericError& e) {
    throw NumericError(stage + ": " + e.what());
  } catch (const InputError& e) {
    throw InputError(stage + ": " + e.what());
  }
}

template <class T>
T value_or(const Json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const Json::exception& e) {
    throw InputError(std::string("experiment: bad value for '") + key + "': " + e.what());
  }
}

}  // namespace

void ExperimentConfig::validate() const {
  if (n_schedule.empty()) throw InputError("experiment: n_schedule is empty");
  for (std::size_t i = 0; i < n_schedule.size(); ++i) {
    if (n_schedule[i] < 1) throw InputError("experiment: n_schedule entries must be >= 1");
    if (i > 0 && n_schedule[i] <= n_schedule[i - 1]) throw InputError("experiment: n_schedule must be strictly increasing");
  }
  if (!(priors.drift.domain == truth.domain())) throw InputError("experiment: prior domain differs from the truth");
  priors.drift.validate();
  priors.levy.validate();
  estimator.validate();
  sampler.validate();
  if (!(delta > 0.0) || !(dt > 0.0) || dt >= delta) throw InputError("experiment: need 0 < dt < delta");
  if (!(iterations > warmup)) throw InputError("experiment: iterations must exceed warmup");
  if (thin < 1) throw InputError("experiment: thin must be >= 1");
  if ((iterations - warmup) / thin < 20) throw InputError("experiment: fewer than 20 thinned samples");
  if (epsilons.empty()) throw InputError("experiment: epsilon list is empty");
  for (double e : epsilons) {
    if (!(e >= 0.0)) throw InputError("experiment: epsilon must be non-negative");
  }
  if (metric_replicates < 2 || !(metric_dt > 0.0) || metric_dt >= delta) {
    throw InputError("experiment: invalid metric settings");
  }
}

ExperimentConfig experiment_config_from_json(const Json& j) {
  require_keys(j,
               {"truth", "drift_prior", "levy_prior", "estimator", "sampler", "n_schedule", "delta", "dt",
                "iterations", "warmup", "thin", "seed", "epsilon", "metric", "output"},
               "experiment");
  if (!j.contains("truth")) throw InputError("experiment: missing key 'truth'");
  ExperimentConfig cfg{model_from_json(j.at("truth")), {}, {}, {}};
  const DomainSpec& domain = cfg.truth.domain();
  cfg.priors.drift = gaussian_prior_from_json(j.value("drift_prior", Json::object()), domain);
  cfg.priors.levy = dpmix_from_json(j.value("levy_prior", Json::object()));
  cfg.estimator = estimator_from_json(j.value("estimator", Json::object()));
  cfg.sampler = proposal_from_json(j.value("sampler", Json::object()));
  cfg.n_schedule = value_or(j, "n_schedule", cfg.n_schedule);
  cfg.delta = value_or(j, "delta", cfg.delta);
  cfg.dt = value_or(j, "dt", cfg.dt);
  cfg.iterations = value_or(j, "iterations", cfg.iterations);
  cfg.warmup = value_or(j, "warmup", cfg.warmup);
  cfg.thin = value_or(j, "thin", cfg.thin);
  cfg.seed = value_or(j, "seed", cfg.seed);
  if (j.contains("epsilon")) {
    cfg.epsilons = j.at("epsilon").is_array() ? value_or(j, "epsilon", cfg.epsilons)
                                              : std::vector<double>{value_or(j, "epsilon", 0.0)};
  }
  if (j.contains("metric")) {
    const Json& m = j.at("metric");
    require_keys(m, {"replicates", "dt"}, "metric");
    cfg.metric_replicates = value_or(m, "replicates", cfg.metric_replicates);
    cfg.metric_dt = value_or(m, "dt", cfg.metric_dt);
  }
  cfg.output_dir = value_or<std::string>(j, "output", cfg.output_dir.string());
  cfg.validate();
  return cfg;
}

Json experiment_config_to_json(const ExperimentConfig& cfg) {
  return {{"truth", model_to_json(cfg.truth)},
          {"drift_prior", gaussian_prior_to_json(cfg.priors.drift)},
          {"levy_prior", dpmix_to_json(cfg.priors.levy)},
          {"estimator", estimator_to_json(cfg.estimator)},
          {"sampler", proposal_to_json(cfg.sampler)},
          {"n_schedule", cfg.n_schedule},
          {"delta", cfg.delta},
          {"dt", cfg.dt},
          {"iterations", cfg.iterations},
          {"warmup", cfg.warmup},
          {"thin", cfg.thin},
          {"seed", cfg.seed},
          {"epsilon", cfg.epsilons},
          {"metric", {{"replicates", cfg.metric_replicates}, {"dt", cfg.metric_dt}}},
          {"output", cfg.output_dir.string()}};
}

std::vector<double> ExperimentResult::median_distances() const {
  std::vector<double> out;
  for (const auto& row : rows) out.push_back(row.summary.median_distance);
  return out;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, bool write_files) {
  cfg.validate();
  const auto dir = cfg.output_dir;
  const Json config_json = experiment_config_to_json(cfg);
  const std::string hash = model_hash(cfg.truth);
  const std::uint64_t data_seed = derive_seed(cfg.seed, {10});
  const std::uint64_t metric_seed = derive_seed(cfg.seed, {12});

  ExperimentResult result;
  Json files = Json::array();
  auto emit = [&](const std::string& name, const std::string& text) {
    if (!write_files) return;
    write_text_file(dir / name, text);
    files.push_back(name);
  };

  const ObservationSeries data = run_stage("simulate", [&] {
    return sample_observations(cfg.truth, cfg.n_schedule.back(), cfg.delta, cfg.dt, data_seed);
  });
  emit("observations.csv", observations_to_csv(data, hash, cfg.dt, data_seed));

  const WeakMetricConfig metric{test_fields::default_dictionary(cfg.truth.dim()), default_rho(cfg.truth.domain()),
                                cfg.delta,  cfg.metric_replicates, cfg.metric_dt, metric_seed};

  result.curves.resize(cfg.epsilons.size());
  for (std::size_t i = 0; i < cfg.epsilons.size(); ++i) result.curves[i] = ContractionCurve{};
  Json chains = Json::array();
  for (std::size_t n : cfg.n_schedule) {
    const std::uint64_t chain_seed = derive_seed(cfg.seed, {11, n});
    const auto subset = data.prefix(n);
    const Chain chain = run_stage("infer n=" + std::to_string(n), [&] {
      return run_chain(subset, cfg.priors, cfg.estimator, cfg.sampler, cfg.iterations, cfg.warmup, chain_seed);
    });
    emit("chain_n" + std::to_string(n) + ".jsonl", chain_to_jsonl(chain));

    ExperimentRow row;
    row.n = n;
    row.chain_summary = chain_summary_to_json(chain);
    row.distances = run_stage("contraction n=" + std::to_string(n),
                              [&] { return contraction_distances(chain, cfg.truth, metric, cfg.thin); });
    for (std::size_t e = 0; e < cfg.epsilons.size(); ++e) {
      const auto s = summarize_distances(row.distances, cfg.epsilons[e], derive_seed(metric_seed, {n}));
      if (e == 0) row.summary = s;
      result.curves[e].entries.push_back({n, cfg.epsilons[e], s.mass_outside, s.median_distance, s.median_stderr});
    }
    Json chain_entry = row.chain_summary;
    chain_entry["n"] = n;
    chain_entry["seed"] = chain_seed;
    chains.push_back(std::move(chain_entry));
    result.rows.push_back(std::move(row));
  }

  for (std::size_t e = 0; e < cfg.epsilons.size(); ++e) {
    emit("curve_eps" + std::to_string(e) + ".csv", curve_to_csv(result.curves[e]));
  }

  result.manifest = {{"version", version()},
                     {"config", config_json},
                     {"config_hash", hex64(fnv1a(config_json.dump()))},
                     {"truth_hash", hash},
                     {"seeds", {{"master", cfg.seed}, {"data", data_seed}, {"metric", metric_seed}}},
                     {"epsilon_files", cfg.epsilons},
                     {"chains", chains}};
  if (write_files) {
    Json manifest = result.manifest;
    manifest["files"] = files;
    write_text_file(dir / "manifest.json", manifest.dump(2) + "\n");
    result.manifest = manifest;
  }
  return result;
}

}  // namespace jumpcons
