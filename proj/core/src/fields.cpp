#include "jumpcons/fields.hpp"

#include <cmath>
#include <utility>

#include "jumpcons/errors.hpp"

namespace jumpcons {

Matrix VectorField::jacobian(const Vector& x) const {
  const int d = dim();
  Matrix jac(d, d);
  Vector xp = x;
  Vector xm = x;
  Vector fp(d);
  Vector fm(d);
  const double h = fd_step(x);
  for (int j = 0; j < d; ++j) {
    xp(j) = x(j) + h;
    xm(j) = x(j) - h;
    eval(xp, fp);
    eval(xm, fm);
    jac.col(j) = (fp - fm) / (2.0 * h);
    xp(j) = x(j);
    xm(j) = x(j);
  }
  return jac;
}

AffineField::AffineField(Matrix a, Vector c) : a_(std::move(a)), c_(std::move(c)) {
  if (a_.rows() != a_.cols() || a_.rows() != c_.size()) {
    throw InputError("affine field needs a square matrix matching the offset");
  }
}

AffineField::AffineField(Matrix a) : AffineField(a, Vector::Zero(a.rows())) {}

FunctionField::FunctionField(int dim, Fn fn, JacFn jac)
    : dim_(dim), fn_(std::move(fn)), jac_(std::move(jac)) {}

Matrix FunctionField::jacobian(const Vector& x) const {
  if (jac_) return jac_(x);
  return VectorField::jacobian(x);
}

namespace test_fields {

TestField constant(int dim, double c) {
  return {"constant",
          [c](const Vector&) { return c; },
          [dim](const Vector&) { return Vector::Zero(dim); },
          [dim](const Vector&) { return Matrix::Zero(dim, dim); },
          0.0};
}

TestField coordinate(int dim, int i) {
  return {"x" + std::to_string(i + 1),
          [i](const Vector& x) { return x(i); },
          [dim, i](const Vector&) {
            Vector g = Vector::Zero(dim);
            g(i) = 1.0;
            return g;
          },
          [dim](const Vector&) { return Matrix::Zero(dim, dim); },
          1.0};
}

TestField coordinate_squared(int dim, int i) {
  return {"x" + std::to_string(i + 1) + "^2",
          [i](const Vector& x) { return x(i) * x(i); },
          [dim, i](const Vector& x) {
            Vector g = Vector::Zero(dim);
            g(i) = 2.0 * x(i);
            return g;
          },
          [dim, i](const Vector&) {
            Matrix h = Matrix::Zero(dim, dim);
            h(i, i) = 2.0;
            return h;
          },
          0.0};
}

TestField squared_norm(int dim) {
  return {"|x|^2",
          [](const Vector& x) { return x.squaredNorm(); },
          [](const Vector& x) { return Vector(2.0 * x); },
          [dim](const Vector&) { return Matrix(2.0 * Matrix::Identity(dim, dim)); },
          0.0};
}

TestField tanh_ridge(Vector alpha, double beta) {
  const double lip = alpha.norm();
  std::string name = "tanh(a.x" + std::string(beta < 0 ? "-" : "+") + std::to_string(std::abs(beta)) + ")";
  return {std::move(name),
          [alpha, beta](const Vector& x) { return std::tanh(alpha.dot(x) + beta); },
          [alpha, beta](const Vector& x) {
            const double t = std::tanh(alpha.dot(x) + beta);
            return Vector((1.0 - t * t) * alpha);
          },
          [alpha, beta](const Vector& x) {
            const double t = std::tanh(alpha.dot(x) + beta);
            return Matrix(-2.0 * t * (1.0 - t * t) * alpha * alpha.transpose());
          },
          lip};
}

std::vector<TestField> default_dictionary(int dim) {
  std::vector<Vector> directions;
  for (int i = 0; i < dim; ++i) directions.push_back(Vector::Unit(dim, i));
  if (dim > 1) directions.push_back(Vector::Ones(dim) / std::sqrt(static_cast<double>(dim)));
  std::vector<TestField> out;
  for (const auto& e : directions) {
    for (double beta : {-1.0, 0.0, 1.0}) out.push_back(tanh_ridge(e, beta));
  }
  return out;
}

}  // namespace test_fields
}  // namespace jumpcons
