#include "jumpcons/priors.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "jumpcons/errors.hpp"
#include "jumpcons/rng.hpp"

namespace jumpcons {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

void check_matches(const DriftSpec& drift, const GaussianPriorConfig& cfg) {
  if (!(drift.domain() == cfg.domain) || drift.s() != cfg.s || drift.level() != cfg.level) {
    throw InputError("drift truncation does not match the prior configuration");
  }
}

double normal_logpdf(double x, double mean, double sd) {
  const double z = (x - mean) / sd;
  return -0.5 * z * z - std::log(sd) - 0.5 * kLog2Pi;
}

}  // namespace

void GaussianPriorConfig::validate() const {
  domain.validate();
  if (!(s > domain.d + 2)) throw InputError("prior smoothness s must exceed d + 2");
  if (level < 1 || level > DriftSpec::kMaxLevel) throw InputError("truncation level J out of range");
  if (!(k > 0.0)) throw InputError("tail strength k must be positive");
}

std::vector<double> drift_prior_variances(const GaussianPriorConfig& cfg) {
  cfg.validate();
  const DriftSpec shape(cfg.domain, cfg.s, cfg.k, cfg.level);
  const std::size_t per = shape.basis_size();
  std::vector<double> var(per * static_cast<std::size_t>(cfg.domain.d));
  for (std::size_t f = 0; f < per; ++f) {
    const double v = std::pow(basis_eigenvalue(multi_index(f, cfg.domain.d, cfg.level), cfg.domain.r), -cfg.s);
    for (int c = 0; c < cfg.domain.d; ++c) var[static_cast<std::size_t>(c) * per + f] = v;
  }
  return var;
}

DriftSpec sample_drift_prior(const GaussianPriorConfig& cfg, std::uint64_t seed) {
  const auto var = drift_prior_variances(cfg);
  DriftSpec drift(cfg.domain, cfg.s, cfg.k, cfg.level);
  Engine rng = make_engine(seed, {0});
  std::normal_distribution<double> gauss;
  auto coeffs = drift.coefficients();
  for (std::size_t i = 0; i < coeffs.size(); ++i) coeffs[i] = std::sqrt(var[i]) * gauss(rng);
  return drift;
}

double drift_prior_logdensity(const DriftSpec& drift, const GaussianPriorConfig& cfg) {
  check_matches(drift, cfg);
  const auto var = drift_prior_variances(cfg);
  const auto coeffs = drift.coefficients();
  double sum = 0.0;
  for (std::size_t i = 0; i < coeffs.size(); ++i) {
    sum += -coeffs[i] * coeffs[i] / (2.0 * var[i]) - 0.5 * std::log(2.0 * std::numbers::pi * var[i]);
  }
  return sum;
}

void DPMixConfig::validate() const {
  if (!(zeta_mass > 0.0)) throw InputError("zeta_mass must be positive");
  if (!(mass_tol > 0.0 && mass_tol <= 0.01)) throw InputError("mass_tol must lie in (0, 0.01]");
  if (!(tau_log_sd > 0.0)) throw InputError("tau_log_sd must be positive");
  if (!(lambda_shape > 0.0 && lambda_rate > 0.0)) throw InputError("lambda prior parameters must be positive");
  if (max_atoms < 1) throw InputError("max_atoms must be at least 1");
}

LevyMixture sample_levy_prior(const DPMixConfig& cfg, const DomainSpec& domain, std::uint64_t seed) {
  cfg.validate();
  domain.validate();
  Engine rng = make_engine(seed, {1});
  std::uniform_real_distribution<double> uniform;
  std::normal_distribution<double> gauss;

  std::vector<LevyAtom> atoms;
  double remaining = 1.0;
  while (remaining > cfg.mass_tol) {
    // Beta(1, alpha) by inversion.
    double v = 1.0 - std::pow(1.0 - uniform(rng), 1.0 / cfg.zeta_mass);
    if (atoms.size() + 1 == cfg.max_atoms) v = 1.0;
    LevyAtom atom;
    atom.weight = v * remaining;
    atom.center = Vector(domain.d);
    for (int c = 0; c < domain.d; ++c) atom.center(c) = domain.r * (2.0 * uniform(rng) - 1.0);
    atom.tau = std::exp(cfg.tau_log_mean + cfg.tau_log_sd * gauss(rng));
    atoms.push_back(std::move(atom));
    remaining *= 1.0 - v;
  }
  std::gamma_distribution<double> gamma(cfg.lambda_shape, 1.0 / cfg.lambda_rate);
  const double lambda = gamma(rng);
  return LevyMixture(domain, lambda, cfg.mass_tol, std::move(atoms));
}

std::vector<double> stick_proportions(const std::vector<LevyAtom>& atoms) {
  std::vector<double> v(atoms.size());
  double remaining = 1.0;
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    v[i] = remaining > 0.0 ? std::min(1.0, atoms[i].weight / remaining) : 1.0;
    remaining -= atoms[i].weight;
  }
  return v;
}

double levy_prior_logdensity(const LevyMixture& levy, const DPMixConfig& cfg) {
  cfg.validate();
  const auto& atoms = levy.atoms();
  const auto v = stick_proportions(atoms);
  const DomainSpec& domain = levy.domain();

  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < atoms.size(); ++i) {
    if (!(v[i] > 0.0 && v[i] < 1.0)) throw InputError("weights do not form a valid stick-breaking sequence");
    sum += std::log(cfg.zeta_mass) + (cfg.zeta_mass - 1.0) * std::log1p(-v[i]);
  }
  for (const auto& atom : atoms) {
    sum += -domain.d * std::log(2.0 * domain.r);
    const double lt = std::log(atom.tau);
    sum += normal_logpdf(lt, cfg.tau_log_mean, cfg.tau_log_sd) - lt;
  }
  const double lambda = levy.lambda();
  if (!(lambda > 0.0)) return -std::numeric_limits<double>::infinity();
  sum += cfg.lambda_shape * std::log(cfg.lambda_rate) - std::lgamma(cfg.lambda_shape) +
         (cfg.lambda_shape - 1.0) * std::log(lambda) - cfg.lambda_rate * lambda;
  return sum;
}

LevyMixture close_last_stick(const LevyMixture& levy) {
  auto atoms = levy.atoms();
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < atoms.size(); ++i) total += atoms[i].weight;
  atoms.back().weight = std::max(0.0, 1.0 - total);
  return LevyMixture(levy.domain(), levy.lambda(), levy.mass_tol(), std::move(atoms));
}

}  // namespace jumpcons
