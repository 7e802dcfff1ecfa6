#include "jumpcons/levy.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <boost/math/special_functions/erf.hpp>

#include "jumpcons/errors.hpp"
#include "jumpcons/quadrature.hpp"

namespace jumpcons {
namespace {

constexpr double kSqrt2 = std::numbers::sqrt2;

// Standard normal lower and upper tail probabilities.
double norm_cdf(double x) { return 0.5 * std::erfc(-x / kSqrt2); }
double norm_sf(double x) { return 0.5 * std::erfc(x / kSqrt2); }

double norm_ppf(double p) { return -kSqrt2 * boost::math::erfc_inv(2.0 * p); }
double norm_isf(double q) { return kSqrt2 * boost::math::erfc_inv(2.0 * q); }

// P(a <= N(0,1) <= b), accurate in both tails.
double interval_mass(double a, double b) {
  if (a >= 0.0) return norm_sf(a) - norm_sf(b);
  return norm_cdf(b) - norm_cdf(a);
}

void check_tau(double tau) {
  if (!(tau > 0.0) || !std::isfinite(tau)) throw InputError("kernel precision tau must be in (0, inf)");
}

}  // namespace

double truncated_kernel_mass(const Vector& center, double tau, const DomainSpec& domain) {
  check_tau(tau);
  const double st = std::sqrt(tau);
  double mass = 1.0;
  for (int i = 0; i < domain.d; ++i) {
    mass *= interval_mass(st * (-domain.r - center(i)), st * (domain.r - center(i)));
  }
  return mass;
}

double truncated_kernel(const Vector& z, const Vector& center, double tau, const DomainSpec& domain) {
  check_tau(tau);
  if (!domain.contains(z)) return 0.0;
  const double mass = truncated_kernel_mass(center, tau, domain);
  const double d = domain.d;
  const double q = (z - center).squaredNorm();
  return std::pow(tau / (2.0 * std::numbers::pi), 0.5 * d) * std::exp(-0.5 * tau * q) / mass;
}

LevyMixture::LevyMixture(DomainSpec domain, double lambda, double mass_tol, std::vector<LevyAtom> atoms)
    : domain_(domain), lambda_(lambda), mass_tol_(mass_tol), atoms_(std::move(atoms)) {
  domain_.validate();
  if (!(lambda_ >= 0.0) || !std::isfinite(lambda_)) throw InputError("Levy intensity must be finite and >= 0");
  if (!(mass_tol_ > 0.0 && mass_tol_ < 1.0)) throw InputError("mass_tol must lie in (0, 1)");
  if (atoms_.empty()) throw InputError("Levy mixture needs at least one atom");

  total_weight_ = 0.0;
  for (const auto& atom : atoms_) {
    if (!(atom.weight >= 0.0) || !std::isfinite(atom.weight)) throw InputError("atom weights must be >= 0");
    if (atom.center.size() != domain_.d) throw InputError("atom centre dimension mismatch");
    if (!domain_.contains(atom.center)) throw InputError("atom centre lies outside D_r");
    check_tau(atom.tau);
    total_weight_ += atom.weight;
  }
  constexpr double kSlack = 1e-12;
  if (total_weight_ > 1.0 + kSlack || total_weight_ < 1.0 - mass_tol_ - kSlack) {
    throw InputError("atom weights must sum to within [1 - mass_tol, 1]");
  }

  cumulative_.reserve(atoms_.size());
  double acc = 0.0;
  for (const auto& atom : atoms_) {
    acc += atom.weight / total_weight_;
    cumulative_.push_back(acc);
  }
  cumulative_.back() = 1.0;

  cache_.reserve(atoms_.size());
  for (const auto& atom : atoms_) {
    AtomCache c;
    c.sqrt_tau = std::sqrt(atom.tau);
    double log_mass = 0.0;
    for (int i = 0; i < domain_.d; ++i) {
      const double a = c.sqrt_tau * (-domain_.r - atom.center(i));
      const double b = c.sqrt_tau * (domain_.r - atom.center(i));
      const bool upper = a >= 0.0;
      c.upper_tail.push_back(upper ? 1 : 0);
      c.p_lo.push_back(upper ? norm_sf(a) : norm_cdf(a));
      c.p_hi.push_back(upper ? norm_sf(b) : norm_cdf(b));
      log_mass += std::log(interval_mass(a, b));
    }
    c.log_norm = 0.5 * domain_.d * std::log(atom.tau / (2.0 * std::numbers::pi)) - log_mass;
    cache_.push_back(std::move(c));
  }
}

LevyMixture LevyMixture::zero(DomainSpec domain) {
  return LevyMixture(domain, 0.0, 0.01, {LevyAtom{1.0, Vector::Zero(domain.d), 1.0}});
}

double LevyMixture::shape_density(const Vector& z) const {
  if (!domain_.contains(z)) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < atoms_.size(); ++i) {
    const auto& atom = atoms_[i];
    if (atom.weight == 0.0) continue;
    const double q = (z - atom.center).squaredNorm();
    sum += atom.weight * std::exp(cache_[i].log_norm - 0.5 * atom.tau * q);
  }
  return sum / total_weight_;
}

double LevyMixture::density(const Vector& z) const {
  if (lambda_ == 0.0) return 0.0;
  return total_mass() * shape_density(z);
}

Vector LevyMixture::sample_jump(double u_atom, std::span<const double> u_coords) const {
  if (static_cast<int>(u_coords.size()) < domain_.d) throw InputError("need one uniform per axis");
  const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u_atom);
  const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(it - cumulative_.begin()), atoms_.size() - 1);
  const auto& atom = atoms_[k];
  const auto& c = cache_[k];
  Vector z(domain_.d);
  for (int i = 0; i < domain_.d; ++i) {
    const double u = std::clamp(u_coords[i], 1e-300, 1.0 - 1e-16);
    const double p = c.p_lo[i] + u * (c.p_hi[i] - c.p_lo[i]);
    const double x = c.upper_tail[i] ? norm_isf(p) : norm_ppf(p);
    // Rounding in the far tail can step just outside the interval.
    z(i) = std::clamp(atom.center(i) + x / c.sqrt_tau, -domain_.r, domain_.r);
  }
  return z;
}

Vector LevyMixture::small_jump_mean(int order) const {
  Vector mean = Vector::Zero(domain_.d);
  if (lambda_ == 0.0) return mean;
  const auto grid = jump_domain_grid(order, domain_.d, domain_.r);
  for (Eigen::Index n = 0; n < grid.weights.size(); ++n) {
    const Vector z = grid.points.col(n);
    if (z.norm() > 1.0) continue;
    mean += grid.weights(n) * density(z) * z;
  }
  return mean;
}

double LevyMixture::second_moment(int order) const {
  if (lambda_ == 0.0) return 0.0;
  const auto grid = jump_domain_grid(order, domain_.d, domain_.r);
  double sum = 0.0;
  for (Eigen::Index n = 0; n < grid.weights.size(); ++n) {
    const Vector z = grid.points.col(n);
    sum += grid.weights(n) * density(z) * z.squaredNorm();
  }
  return sum;
}

LevyMixture LevyMixture::with_lambda(double lambda) const {
  return LevyMixture(domain_, lambda, mass_tol_, atoms_);
}

}  // namespace jumpcons
