#pragma once

#include <span>
#include <vector>

#include "jumpcons/domain.hpp"
#include "jumpcons/types.hpp"

namespace jumpcons {

/// Gaussian density with covariance tau^{-1} I centred at `center`,
/// restricted to the core D_r and renormalised to a probability density on
/// it. Zero outside D_r. Throws InputError for tau <= 0.
double truncated_kernel(const Vector& z, const Vector& center, double tau, const DomainSpec& domain);

/// Mass of the untruncated kernel inside D_r (the renormalisation constant).
double truncated_kernel_mass(const Vector& center, double tau, const DomainSpec& domain);

struct LevyAtom {
  double weight = 0.0;
  Vector center;
  double tau = 1.0;
};

/// Homogeneous finite Levy measure
///   nu(dz) = lambda * sum_i w_i phi_{r, tau_i}(z - z_i) dz   on D_r,
/// with nu(D_r^c) = 0 and 1 - mass_tol <= sum w_i <= 1.
class LevyMixture {
 public:
  /// Validates every invariant; throws InputError on violation.
  LevyMixture(DomainSpec domain, double lambda, double mass_tol, std::vector<LevyAtom> atoms);

  /// lambda = 0 with a single standard atom at the origin.
  static LevyMixture zero(DomainSpec domain);

  const DomainSpec& domain() const { return domain_; }
  double lambda() const { return lambda_; }
  double mass_tol() const { return mass_tol_; }
  const std::vector<LevyAtom>& atoms() const { return atoms_; }
  double total_weight() const { return total_weight_; }

  /// nu(D_r) = lambda * sum w_i: the jump rate.
  double total_mass() const { return lambda_ * total_weight_; }

  /// Intensity density lambda * sum w_i phi(z - z_i); 0 outside D_r.
  double density(const Vector& z) const;
  /// Jump-size probability density (density / total_mass).
  double shape_density(const Vector& z) const;

  /// Draws a jump size from the normalised mixture by inversion:
  /// `u_atom` selects the component, `u_coords` (one per axis) drive the
  /// per-axis truncated-normal inverse CDF. Monotone in each uniform, which
  /// keeps common-random-number couplings smooth.
  Vector sample_jump(double u_atom, std::span<const double> u_coords) const;

  /// int_{0 < |z|_2 <= 1} z nu(dz), by tensor Gauss-Legendre quadrature.
  Vector small_jump_mean(int order = 32) const;
  /// int |z|_2^2 nu(dz).
  double second_moment(int order = 32) const;

  LevyMixture with_lambda(double lambda) const;

 private:
  // Per-axis truncation bounds in probability space. On axes whose
  // standardised interval lies right of zero the upper tail function is used
  // instead of the CDF so that neither endpoint rounds to 1.
  struct AtomCache {
    double sqrt_tau;
    double log_norm;  // log((tau / 2pi)^{d/2} / mass)
    std::vector<double> p_lo;
    std::vector<double> p_hi;
    std::vector<char> upper_tail;
  };

  DomainSpec domain_;
  double lambda_;
  double mass_tol_;
  std::vector<LevyAtom> atoms_;
  double total_weight_ = 0.0;
  std::vector<double> cumulative_;  // normalised cumulative weights
  std::vector<AtomCache> cache_;
};

}  // namespace jumpcons
