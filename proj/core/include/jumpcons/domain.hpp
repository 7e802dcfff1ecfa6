#pragma once

#include "jumpcons/types.hpp"

namespace jumpcons {

/// Core region geometry. The core D_r is the closed sup-norm ball of radius r
/// so the Dirichlet Laplacian has the closed-form tensor sine eigenbasis; for
/// d = 1 it is the interval [-r, r]. The shell r <= |x|_inf <= r + 1 carries
/// the interpolation to the fixed inward tail.
struct DomainSpec {
  static constexpr double kShellWidth = 1.0;

  int d = 1;
  double r = 1.0;

  DomainSpec() = default;
  DomainSpec(int dim, double radius);

  /// Throws InputError unless d >= 1 and r > 0.
  void validate() const;

  bool contains(const Vector& x) const;
  double outer_radius() const { return r + kShellWidth; }

  friend bool operator==(const DomainSpec&, const DomainSpec&) = default;
};

inline double sup_norm(const Vector& x) { return x.size() == 0 ? 0.0 : x.cwiseAbs().maxCoeff(); }

}  // namespace jumpcons
