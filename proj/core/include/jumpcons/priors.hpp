#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "jumpcons/domain.hpp"
#include "jumpcons/drift.hpp"
#include "jumpcons/levy.hpp"

namespace jumpcons {

/// Centred Gaussian drift prior with covariance (-Laplacian)^{-s},
/// truncated to J basis functions per axis.
struct GaussianPriorConfig {
  DomainSpec domain;
  double s = 4.0;
  int level = 4;
  double k = 1.0;

  /// Throws InputError unless s > d + 2, J >= 1 and k > 0.
  void validate() const;
};

/// Prior variance lambda_j^{-s} of every coefficient, in DriftSpec layout.
std::vector<double> drift_prior_variances(const GaussianPriorConfig& cfg);

DriftSpec sample_drift_prior(const GaussianPriorConfig& cfg, std::uint64_t seed);

/// Log density of the truncated Gaussian prior at the drift's coefficients.
/// Throws InputError when the drift's domain, s or J differ from cfg.
double drift_prior_logdensity(const DriftSpec& drift, const GaussianPriorConfig& cfg);

/// Dirichlet-process mixture prior on the Levy measure with uniform base
/// measure on D_r, log-normal precisions and a Gamma prior on lambda.
struct DPMixConfig {
  double zeta_mass = 1.0;
  double tau_log_mean = 0.0;
  double tau_log_sd = 1.0;
  double mass_tol = 1e-3;
  double lambda_shape = 2.0;
  double lambda_rate = 2.0;
  /// Stick cap; the residual mass is assigned to the last atom when reached.
  std::size_t max_atoms = 256;

  /// Throws InputError unless zeta_mass > 0, mass_tol in (0, 0.01],
  /// tau_log_sd > 0, lambda shape/rate > 0 and max_atoms >= 1.
  void validate() const;
};

/// Stick-breaking draw: v_i ~ Beta(1, zeta_mass) until sum w_i >= 1 - mass_tol.
LevyMixture sample_levy_prior(const DPMixConfig& cfg, const DomainSpec& domain, std::uint64_t seed);

/// Joint log density of (v_1..v_{K-1}, centres, tau, lambda) for a mixture
/// with K atoms under the DP prior truncated at K sticks (last stick closed).
/// The sticks are recovered from the weights. Throws InputError if the
/// weights are not a valid stick-breaking sequence.
double levy_prior_logdensity(const LevyMixture& levy, const DPMixConfig& cfg);

/// Same mixture with the residual mass 1 - sum w_i added to the last atom.
LevyMixture close_last_stick(const LevyMixture& levy);

/// Stick proportions v_i = w_i / (1 - sum_{l<i} w_l), i = 1..K.
std::vector<double> stick_proportions(const std::vector<LevyAtom>& atoms);

}  // namespace jumpcons
