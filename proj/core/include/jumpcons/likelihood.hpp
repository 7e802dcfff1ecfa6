#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "jumpcons/conditions.hpp"
#include "jumpcons/model.hpp"
#include "jumpcons/priors.hpp"
#include "jumpcons/simulator.hpp"

namespace jumpcons {

/// Density ratios are clipped to [kRatioFloor, kRatioCeiling].
inline constexpr double kRatioFloor = 1e-12;
inline constexpr double kRatioCeiling = 1e12;

struct GirsanovWeight {
  /// log dP^{target}/dP^{reference} along the path; -inf when singular.
  double log_weight = 0.0;
  /// A realised jump where the target jump density vanishes.
  bool singular = false;
  /// Number of density ratios that were clipped.
  std::size_t clipped = 0;
};

/// Discretised log stochastic exponential of a path simulated under
/// `reference`, evaluated for `target`:
///   sum_i g(X_i).dW_i - 1/2 |g(X_i)|^2 dt_i
///   + sum_jumps log(dnu/dnu_ref)(dX) - T (nu(D_r) - nu_ref(D_r)),
/// g = b - b_ref - int (dnu/dnu_ref - 1) 1{|z|<=1} z nu_ref(dz).
/// Throws InputError when the models live on different domains or the
/// skeleton does not match their dimension.
GirsanovWeight log_girsanov_weight(const PathSkeleton& skeleton, const JumpDiffusionModel& reference,
                                   const JumpDiffusionModel& target, const QuadratureConfig& quad = {});

struct KLBoundTerms {
  double drift_term = 0.0;
  double jump_term = 0.0;
  double total = 0.0;
  std::size_t clipped = 0;
};

/// Per-unit-time bound on KL(P^{truth} | P^{candidate}) from the empirical
/// stationary measure of `stationary_samples`:
///   drift_term = 1/2 (|b0 - b|_{2,pi} + |int (dnu0/dnu - 1) 1{|z|<=1} z nu(dz)|)^2
///   jump_term  = |int [log(dnu0/dnu) - dnu0/dnu + 1] nu0(dz)|
/// Throws SupportViolation when the density ratio is 0 or infinite on the
/// quadrature grid, InputError when the sample list is empty.
KLBoundTerms kl_upper_bound(const JumpDiffusionModel& truth, const JumpDiffusionModel& candidate,
                            std::span<const Vector> stationary_samples, const QuadratureConfig& quad = {});

/// Exact per-unit-time path KL rate
///   1/2 |g|^2_{2,pi} + int [rho log rho - rho + 1] nu(dz),  rho = dnu0/dnu,
/// with g the effective drift difference. Diagnostic companion to
/// kl_upper_bound.
double path_kl_rate(const JumpDiffusionModel& truth, const JumpDiffusionModel& candidate,
                    std::span<const Vector> stationary_samples, const QuadratureConfig& quad = {});

/// Monte Carlo summary of Girsanov weights over paths simulated under the
/// reference, path k starting at starts[k % starts.size()].
struct GirsanovSummary {
  std::size_t paths = 0;
  double mean_log_weight = 0.0;
  double stderr_log_weight = 0.0;
  double mean_weight = 0.0;
  double stderr_weight = 0.0;
  std::size_t singular = 0;
  std::size_t clipped = 0;
};

GirsanovSummary girsanov_summary(const JumpDiffusionModel& reference, const JumpDiffusionModel& target,
                                 std::span<const Vector> starts, double delta, std::size_t paths, double dt,
                                 std::uint64_t seed, const QuadratureConfig& quad = {});

/// 0 <= mean(-log weight) <= delta * bound.total + 3 stderr, with paths
/// simulated under the truth from its stationary samples.
struct KLChainCheck {
  double mean_neg_log_weight = 0.0;
  double stderr = 0.0;
  double bound = 0.0;
  double exact = 0.0;
  bool lower_holds = false;
  bool upper_holds = false;
  bool holds() const { return lower_holds && upper_holds; }
};

KLChainCheck validate_kl_chain(const JumpDiffusionModel& truth, const JumpDiffusionModel& candidate,
                               std::span<const Vector> stationary_samples, double delta, std::size_t paths,
                               double dt, std::uint64_t seed, const QuadratureConfig& quad = {});

struct DensityEstimate {
  double density = 0.0;
  double stderr = 0.0;
  double log_density = 0.0;
  Vector bandwidth;
};

inline constexpr std::size_t kMinDensityReplicates = 100;

/// Product-Gaussian kernel density estimate of the delta-transition density
/// from x evaluated at y, from `replicates` simulated endpoints. Bandwidth
/// defaults to Silverman's rule per coordinate. Throws InputError when
/// replicates < 100 or a bandwidth is zero.
DensityEstimate estimate_transition_density(const JumpDiffusionModel& model, const Vector& x, const Vector& y,
                                            double delta, std::size_t replicates, std::optional<double> bandwidth,
                                            double dt, std::uint64_t seed);

/// KDE evaluation on precomputed endpoints.
DensityEstimate kernel_density(std::span<const Vector> endpoints, const Vector& y, std::optional<double> bandwidth);

struct EstimatorConfig {
  std::size_t replicates = 128;
  double dt = 0.05;
  std::optional<double> bandwidth;
  double refresh_prob = 0.05;
  bool include_stationary_factor = false;

  /// Throws InputError on invalid values.
  void validate() const;
};

struct PriorConfigs {
  GaussianPriorConfig drift;
  DPMixConfig levy;
};

struct PosteriorScore {
  double total = 0.0;
  double drift_prior = 0.0;
  double levy_prior = 0.0;
  double log_likelihood = 0.0;
  double stationary = 0.0;
  /// Transitions whose density estimate underflowed to zero.
  std::size_t zero_transitions = 0;
};

/// drift prior + Levy prior + sum_i log p_delta(x_{i-1}, x_i), each
/// transition estimated with streams derived from (aux_seed, i). With
/// `include_likelihood` false only the prior terms are evaluated.
PosteriorScore log_posterior_unnorm(const JumpDiffusionModel& params, const ObservationSeries& data,
                                    const PriorConfigs& priors, const EstimatorConfig& estimator,
                                    std::uint64_t aux_seed, bool include_likelihood = true);

}  // namespace jumpcons
