#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "jumpcons/fields.hpp"
#include "jumpcons/likelihood.hpp"
#include "jumpcons/model.hpp"
#include "jumpcons/priors.hpp"
#include "jumpcons/simulator.hpp"

namespace jumpcons {

enum class Block {
  kDrift = 0,      // pCN on the series coefficients
  kMixture = 1,    // random walk on logit sticks, logit centres and log precisions
  kIntensity = 2,  // random walk on log lambda
};
inline constexpr std::size_t kBlockCount = 3;
const char* block_name(Block block);

struct ProposalConfig {
  double beta_pcn = 0.2;
  double stick_step = 0.3;
  double center_step = 0.3;
  double log_tau_step = 0.3;
  double log_lambda_step = 0.2;
  /// Mixture atoms K kept by the sampler (truncation fixed per run).
  std::size_t atoms = 3;
  /// Adapt beta_pcn and the random-walk scales during warmup only.
  bool adapt = true;
  double target_acceptance = 0.25;
  std::size_t adapt_interval = 50;
  /// Drop the likelihood: the chain then targets the prior.
  bool prior_only = false;

  /// Throws InputError on invalid values.
  void validate() const;
};

struct ChainSample {
  std::vector<double> coefficients;
  LevyMixture levy;
  double log_score = 0.0;
};

struct BlockStats {
  std::string name;
  std::size_t proposed = 0;
  std::size_t accepted = 0;
  double acceptance_rate = 0.0;  // after warmup
  double final_scale = 0.0;
};

struct Chain {
  DriftSpec drift_template;
  std::vector<ChainSample> samples;
  std::vector<BlockStats> blocks;
  std::size_t aux_refreshes = 0;
  std::size_t iterations = 0;
  std::size_t warmup = 0;
  std::uint64_t seed = 0;
  bool tuning_failure = false;
  std::vector<std::string> diagnostics;

  JumpDiffusionModel model(std::size_t i) const;
};

/// Metropolis-within-blocks over the truncated parameterisation with a
/// coupled auxiliary stream for the transition-density estimates. `init`
/// overrides the default start (regression fit of the drift, equal-weight
/// atoms on a grid, lambda at its prior mean). Throws InputError unless
/// iterations > warmup.
Chain run_chain(const ObservationSeries& data, const PriorConfigs& priors, const EstimatorConfig& estimator,
                const ProposalConfig& proposal, std::size_t iterations, std::size_t warmup, std::uint64_t seed,
                const std::optional<JumpDiffusionModel>& init = std::nullopt);

/// Starting drift: posterior mean of a Bayesian linear regression of the
/// scaled increments on the basis over observations inside the core, with
/// one round of outlier trimming.
DriftSpec regression_drift(const ObservationSeries& data, const GaussianPriorConfig& cfg);

/// log of target(to) q(from | to) / (target(from) q(to | from)) for a move
/// of `block`, in the block's unconstrained coordinates, under a fixed
/// auxiliary stream.
double log_acceptance_ratio(Block block, const JumpDiffusionModel& from, const JumpDiffusionModel& to,
                            const ObservationSeries& data, const PriorConfigs& priors,
                            const EstimatorConfig& estimator, std::uint64_t aux_seed, bool prior_only = false);

/// log |d(v, z, tau, lambda) / d(unconstrained)| of the mixture parameters.
double levy_log_jacobian(const LevyMixture& levy);

struct WeakMetricConfig {
  std::vector<TestField> test_functions;
  std::vector<RhoPoint> rho;
  double delta = 0.5;
  std::size_t replicates = 64;
  double dt = 0.01;
  std::uint64_t seed = 0;
};

/// max over test functions of the weak distance between every `thin`-th
/// sample and the truth; truth semigroup values computed once.
std::vector<double> contraction_distances(const Chain& chain, const JumpDiffusionModel& truth,
                                          const WeakMetricConfig& metric, std::size_t thin);

struct ContractionSummary {
  double mass_outside = 0.0;
  double median_distance = 0.0;
  /// Bootstrap standard error of the median.
  double median_stderr = 0.0;
  std::size_t samples = 0;
};

/// Summary of precomputed distances at threshold epsilon. Throws InputError
/// when fewer than 20 distances are given.
ContractionSummary summarize_distances(std::span<const double> distances, double epsilon, std::uint64_t seed);

ContractionSummary contraction_metric(const Chain& chain, const JumpDiffusionModel& truth,
                                      const WeakMetricConfig& metric, double epsilon, std::size_t thin);

struct ContractionEntry {
  std::size_t n = 0;
  double epsilon = 0.0;
  double mass_outside = 0.0;
  double median_distance = 0.0;
  double stderr = 0.0;
};

/// Entries sorted by n.
struct ContractionCurve {
  std::vector<ContractionEntry> entries;
};

}  // namespace jumpcons
