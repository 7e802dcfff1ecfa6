#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "jumpcons/inference.hpp"
#include "jumpcons/serialization.hpp"

namespace jumpcons {

const char* version();

/// End-to-end contraction experiment. JSON keys:
///   truth, drift_prior, levy_prior, estimator, sampler, n_schedule, delta,
///   dt, iterations, warmup, thin, seed, epsilon, metric, output
/// with metric = {replicates, dt}. Unknown keys are errors.
struct ExperimentConfig {
  JumpDiffusionModel truth;
  PriorConfigs priors;
  EstimatorConfig estimator;
  ProposalConfig sampler;
  std::vector<std::size_t> n_schedule{50, 200, 800};
  double delta = 0.5;
  /// Step used to simulate the observed data.
  double dt = 0.01;
  std::size_t iterations = 2000;
  std::size_t warmup = 500;
  std::size_t thin = 25;
  std::uint64_t seed = 1;
  std::vector<double> epsilons{0.05};
  std::size_t metric_replicates = 64;
  double metric_dt = 0.01;
  std::filesystem::path output_dir = "experiment_out";

  /// Throws InputError unless n_schedule is non-empty and strictly
  /// increasing and every sub-configuration is valid.
  void validate() const;
};

ExperimentConfig experiment_config_from_json(const Json& j);
Json experiment_config_to_json(const ExperimentConfig& cfg);

struct ExperimentRow {
  std::size_t n = 0;
  ContractionSummary summary;  // at the first epsilon
  std::vector<double> distances;
  Json chain_summary;
};

struct ExperimentResult {
  std::vector<ExperimentRow> rows;
  /// One curve per epsilon, in config order.
  std::vector<ContractionCurve> curves;
  Json manifest;

  std::vector<double> median_distances() const;
};

/// Simulates one data path from the truth (nested prefixes per n), runs a
/// chain per n, evaluates the contraction metric and, when `write_files`,
/// writes observations, chains, curves and manifest.json under
/// cfg.output_dir. A failing stage is rethrown with its name prepended.
ExperimentResult run_experiment(const ExperimentConfig& cfg, bool write_files = true);

}  // namespace jumpcons
