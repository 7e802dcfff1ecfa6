#include "jumpcons/model.hpp"

#include <cmath>
#include <utility>

#include "jumpcons/errors.hpp"

namespace jumpcons {

DomainSpec::DomainSpec(int dim, double radius) : d(dim), r(radius) { validate(); }

void DomainSpec::validate() const {
  if (d < 1) throw InputError("dimension d must be >= 1");
  if (!(r > 0.0) || !std::isfinite(r)) throw InputError("core radius r must be positive and finite");
}

bool DomainSpec::contains(const Vector& x) const { return x.size() == d && sup_norm(x) <= r; }

JumpDiffusionModel::JumpDiffusionModel(DriftSpec drift, LevyMixture levy)
    : drift_(std::move(drift)), levy_(std::move(levy)) {
  if (!(drift_.domain() == levy_.domain())) {
    throw InputError("drift and Levy measure are defined on different domains");
  }
}

}  // namespace jumpcons
