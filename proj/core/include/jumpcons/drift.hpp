#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "jumpcons/domain.hpp"
#include "jumpcons/fields.hpp"
#include "jumpcons/types.hpp"

namespace jumpcons {

/// Multi-index j = (j_1, ..., j_d) with 1 <= j_i <= J.
using MultiIndex = std::vector<int>;

/// Tensor sine basis of the Dirichlet Laplacian on [-r, r]^d:
///   basis_j(x) = prod_i sin(j_i pi (x_i + r) / (2r)),
///   eigenvalue_j = sum_i (j_i pi / (2r))^2.
double basis_eigenvalue(const MultiIndex& j, double r);
double basis_value(const MultiIndex& j, const Vector& x, double r);

/// Flat <-> multi-index conversion for a dense J^d coefficient tensor.
/// Axis 0 varies fastest.
std::size_t flat_index(const MultiIndex& j, int level);
MultiIndex multi_index(std::size_t flat, int dim, int level);

/// Drift field: a truncated sine series on the core, zero on its boundary,
/// linear radial interpolation across the unit shell, and the inward pull
/// -k x / |x|_2 outside D_{r+1}.
class DriftSpec final : public VectorField {
 public:
  static constexpr int kMaxDim = 8;
  static constexpr int kMaxLevel = 64;

  /// All coefficients zero. Throws InputError unless s > d + 2, k > 0,
  /// 1 <= J <= kMaxLevel and d <= kMaxDim.
  DriftSpec(DomainSpec domain, double s, double k, int level);

  const DomainSpec& domain() const { return domain_; }
  double s() const { return s_; }
  double k() const { return k_; }
  int level() const { return level_; }
  /// Number of multi-indices per component, J^d.
  std::size_t basis_size() const { return basis_size_; }

  double coefficient(int component, const MultiIndex& j) const;
  void set_coefficient(int component, const MultiIndex& j, double a);

  /// Coefficients laid out component-major: [c * J^d + flat_index(j)].
  std::span<const double> coefficients() const { return coeffs_; }
  std::span<double> coefficients() { return coeffs_; }

  int dim() const override { return domain_.d; }
  void eval(const Vector& x, Vector& out) const override;

  /// Series part only (no tail), valid for x in the core.
  void eval_series(const Vector& x, Vector& out) const;

  /// sum |a_j| + k, an upper bound on sup |b|_2.
  double sup_norm_bound() const;
  /// sqrt(sum_c (sum_j |a_j^c| sqrt(eigenvalue_j))^2), a Lipschitz bound for
  /// the series on the core.
  double series_lipschitz_bound() const;

  friend bool operator==(const DriftSpec& a, const DriftSpec& b) {
    return a.domain_ == b.domain_ && a.s_ == b.s_ && a.k_ == b.k_ && a.level_ == b.level_ &&
           a.coeffs_ == b.coeffs_;
  }

 private:
  DomainSpec domain_;
  double s_;
  double k_;
  int level_;
  std::size_t basis_size_;
  std::vector<double> coeffs_;
};

}  // namespace jumpcons
