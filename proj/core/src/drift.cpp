#include "jumpcons/drift.hpp"

#include <array>
#include <cmath>
#include <numbers>

#include "jumpcons/errors.hpp"

namespace jumpcons {

double basis_eigenvalue(const MultiIndex& j, double r) {
  double sum = 0.0;
  for (int ji : j) {
    const double w = ji * std::numbers::pi / (2.0 * r);
    sum += w * w;
  }
  return sum;
}

double basis_value(const MultiIndex& j, const Vector& x, double r) {
  double prod = 1.0;
  for (std::size_t i = 0; i < j.size(); ++i) {
    prod *= std::sin(j[i] * std::numbers::pi * (x(static_cast<Eigen::Index>(i)) + r) / (2.0 * r));
  }
  return prod;
}

std::size_t flat_index(const MultiIndex& j, int level) {
  std::size_t flat = 0;
  std::size_t stride = 1;
  for (int ji : j) {
    if (ji < 1 || ji > level) throw InputError("multi-index component out of range");
    flat += static_cast<std::size_t>(ji - 1) * stride;
    stride *= static_cast<std::size_t>(level);
  }
  return flat;
}

MultiIndex multi_index(std::size_t flat, int dim, int level) {
  MultiIndex j(dim);
  for (int i = 0; i < dim; ++i) {
    j[i] = static_cast<int>(flat % static_cast<std::size_t>(level)) + 1;
    flat /= static_cast<std::size_t>(level);
  }
  return j;
}

DriftSpec::DriftSpec(DomainSpec domain, double s, double k, int level)
    : domain_(domain), s_(s), k_(k), level_(level), basis_size_(1) {
  domain_.validate();
  if (domain_.d > kMaxDim) throw InputError("drift dimension exceeds supported maximum");
  if (!(s_ > domain_.d + 2)) throw InputError("smoothness exponent must satisfy s > d + 2");
  if (!(k_ > 0.0) || !std::isfinite(k_)) throw InputError("tail strength k must be positive");
  if (level_ < 1 || level_ > kMaxLevel) throw InputError("truncation level J out of range");
  for (int i = 0; i < domain_.d; ++i) basis_size_ *= static_cast<std::size_t>(level_);
  coeffs_.assign(basis_size_ * static_cast<std::size_t>(domain_.d), 0.0);
}

double DriftSpec::coefficient(int component, const MultiIndex& j) const {
  if (component < 0 || component >= domain_.d || static_cast<int>(j.size()) != domain_.d) {
    throw InputError("coefficient index does not match drift dimension");
  }
  return coeffs_[component * basis_size_ + flat_index(j, level_)];
}

void DriftSpec::set_coefficient(int component, const MultiIndex& j, double a) {
  if (component < 0 || component >= domain_.d || static_cast<int>(j.size()) != domain_.d) {
    throw InputError("coefficient index does not match drift dimension");
  }
  coeffs_[component * basis_size_ + flat_index(j, level_)] = a;
}

void DriftSpec::eval_series(const Vector& x, Vector& out) const {
  const int d = domain_.d;
  const double r = domain_.r;
  // sin(j theta_i) for j = 1..J by the Chebyshev recurrence.
  std::array<std::array<double, kMaxLevel>, kMaxDim> sines;
  for (int i = 0; i < d; ++i) {
    const double theta = std::numbers::pi * (x(i) + r) / (2.0 * r);
    const double s1 = std::sin(theta);
    const double c2 = 2.0 * std::cos(theta);
    double prev = 0.0;
    double cur = s1;
    sines[i][0] = s1;
    for (int j = 1; j < level_; ++j) {
      const double next = c2 * cur - prev;
      prev = cur;
      cur = next;
      sines[i][j] = cur;
    }
  }

  out.setZero(d);
  if (d == 1) {
    double acc = 0.0;
    for (int j = 0; j < level_; ++j) acc += coeffs_[j] * sines[0][j];
    out(0) = acc;
    return;
  }

  std::array<int, kMaxDim> idx{};
  for (std::size_t n = 0; n < basis_size_; ++n) {
    double prod = 1.0;
    for (int i = 0; i < d; ++i) prod *= sines[i][idx[i]];
    for (int c = 0; c < d; ++c) out(c) += coeffs_[c * basis_size_ + n] * prod;
    for (int i = 0; i < d; ++i) {
      if (++idx[i] < level_) break;
      idx[i] = 0;
    }
  }
}

void DriftSpec::eval(const Vector& x, Vector& out) const {
  const double rho = sup_norm(x);
  const double r = domain_.r;
  if (rho < r) {
    eval_series(x, out);
    return;
  }
  // Shell and tail: -k t x / |x|_2 with t = clamp(|x|_inf - r, 0, 1).
  const double t = std::min(rho - r, DomainSpec::kShellWidth) / DomainSpec::kShellWidth;
  out = (-k_ * t / x.norm()) * x;
}

double DriftSpec::sup_norm_bound() const {
  double sum = 0.0;
  for (double a : coeffs_) sum += std::abs(a);
  return sum + k_;
}

double DriftSpec::series_lipschitz_bound() const {
  const int d = domain_.d;
  std::vector<double> root_eig(basis_size_);
  for (std::size_t n = 0; n < basis_size_; ++n) {
    root_eig[n] = std::sqrt(basis_eigenvalue(multi_index(n, d, level_), domain_.r));
  }
  double total = 0.0;
  for (int c = 0; c < d; ++c) {
    double comp = 0.0;
    for (std::size_t n = 0; n < basis_size_; ++n) comp += std::abs(coeffs_[c * basis_size_ + n]) * root_eig[n];
    total += comp * comp;
  }
  return std::sqrt(total);
}

}  // namespace jumpcons
