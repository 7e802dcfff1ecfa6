#pragma once

#include <algorithm>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "jumpcons/types.hpp"

namespace jumpcons {

/// Central-difference step used for numeric partial derivatives.
inline double fd_step(const Vector& x) { return 1e-5 * std::max(1.0, x.norm()); }

/// A drift-like vector field R^d -> R^d.
class VectorField {
 public:
  virtual ~VectorField() = default;

  virtual int dim() const = 0;
  virtual void eval(const Vector& x, Vector& out) const = 0;

  Vector operator()(const Vector& x) const {
    Vector out(dim());
    eval(x, out);
    return out;
  }

  /// J(i, j) = d b_i / d x_j. Default is central differences.
  virtual Matrix jacobian(const Vector& x) const;
};

/// b(x) = A x + c. Used to build synthetic fields that bypass the drift
/// construction (e.g. deliberately non-dissipative examples).
class AffineField final : public VectorField {
 public:
  AffineField(Matrix a, Vector c);
  explicit AffineField(Matrix a);

  int dim() const override { return static_cast<int>(c_.size()); }
  void eval(const Vector& x, Vector& out) const override { out.noalias() = a_ * x + c_; }
  Matrix jacobian(const Vector&) const override { return a_; }

  const Matrix& matrix() const { return a_; }
  const Vector& offset() const { return c_; }

 private:
  Matrix a_;
  Vector c_;
};

/// Wraps an arbitrary callable; jacobian falls back to finite differences
/// unless one is supplied.
class FunctionField final : public VectorField {
 public:
  using Fn = std::function<Vector(const Vector&)>;
  using JacFn = std::function<Matrix(const Vector&)>;

  FunctionField(int dim, Fn fn, JacFn jac = {});

  int dim() const override { return dim_; }
  void eval(const Vector& x, Vector& out) const override { out = fn_(x); }
  Matrix jacobian(const Vector& x) const override;

 private:
  int dim_;
  Fn fn_;
  JacFn jac_;
};

/// Scalar test function with derivatives, used by the generator, the
/// semigroup estimators and the weak distance.
struct TestField {
  std::string name;
  std::function<double(const Vector&)> value;
  std::function<Vector(const Vector&)> gradient;
  std::function<Matrix(const Vector&)> hessian;
  /// Global Lipschitz constant when known (0 = unknown).
  double lipschitz = 0.0;

  double operator()(const Vector& x) const { return value(x); }
};

namespace test_fields {

TestField constant(int dim, double c);
/// f(x) = x_i.
TestField coordinate(int dim, int i);
/// f(x) = x_i^2.
TestField coordinate_squared(int dim, int i);
/// f(x) = |x|_2^2.
TestField squared_norm(int dim);
/// f(x) = tanh(alpha . x + beta).
TestField tanh_ridge(Vector alpha, double beta);

/// Default dictionary: tanh(e . x + beta) for unit directions e (the axes,
/// plus the normalised diagonal when d > 1) and shifts beta in {-1, 0, 1}.
std::vector<TestField> default_dictionary(int dim);

}  // namespace test_fields

/// Matrix-valued diffusion coefficient for the Lamperti check. `partials`,
/// when present, returns dsigma/dx_l for l = 0..d-1.
struct SigmaField {
  std::function<Matrix(const Vector&)> value;
  std::function<std::vector<Matrix>(const Vector&)> partials;
};

}  // namespace jumpcons
