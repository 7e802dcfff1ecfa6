#pragma once

#include "jumpcons/domain.hpp"
#include "jumpcons/drift.hpp"
#include "jumpcons/levy.hpp"

namespace jumpcons {

/// A parameter point (b, nu): drift construction plus homogeneous finite
/// Levy measure on a shared domain.
class JumpDiffusionModel {
 public:
  /// Throws InputError if drift and Levy measure live on different domains.
  JumpDiffusionModel(DriftSpec drift, LevyMixture levy);

  const DomainSpec& domain() const { return drift_.domain(); }
  int dim() const { return drift_.domain().d; }
  const DriftSpec& drift() const { return drift_; }
  const LevyMixture& levy() const { return levy_; }

 private:
  DriftSpec drift_;
  LevyMixture levy_;
};

}  // namespace jumpcons
