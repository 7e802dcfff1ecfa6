#include "jumpcons/quadrature.hpp"

#include <cmath>
#include <numbers>
#include <utility>

#include "jumpcons/errors.hpp"

namespace jumpcons {

namespace {

// Returns (P_n(x), P_n'(x)) by the three-term recurrence.
std::pair<double, double> legendre(int n, double x) {
  double p0 = 1.0;
  double p1 = x;
  for (int k = 2; k <= n; ++k) {
    const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
    p0 = p1;
    p1 = pk;
  }
  return {p1, n * (x * p1 - p0) / (x * x - 1.0)};
}

}  // namespace

QuadratureRule1D gauss_legendre(int order, double a, double b) {
  if (order < 1) throw InputError("quadrature order must be positive");
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  if (order == 1) return {{mid}, {b - a}};

  QuadratureRule1D rule{std::vector<double>(order), std::vector<double>(order)};
  for (int i = 0; i < (order + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (order + 0.5));
    for (int iter = 0; iter < 100; ++iter) {
      const auto [p, dp] = legendre(order, x);
      const double dx = p / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    const double dp = legendre(order, x).second;
    const double w = half * 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = mid - half * x;
    rule.nodes[order - 1 - i] = mid + half * x;
    rule.weights[i] = w;
    rule.weights[order - 1 - i] = w;
  }
  return rule;
}

QuadratureRule1D composite_gauss_legendre(int order, std::span<const double> breakpoints) {
  QuadratureRule1D out;
  for (std::size_t p = 0; p + 1 < breakpoints.size(); ++p) {
    if (!(breakpoints[p] < breakpoints[p + 1])) continue;
    const auto panel = gauss_legendre(order, breakpoints[p], breakpoints[p + 1]);
    out.nodes.insert(out.nodes.end(), panel.nodes.begin(), panel.nodes.end());
    out.weights.insert(out.weights.end(), panel.weights.begin(), panel.weights.end());
  }
  return out;
}

TensorGrid tensor_grid(const QuadratureRule1D& axis_rule, int dim) {
  const auto m = static_cast<Eigen::Index>(axis_rule.nodes.size());
  Eigen::Index total = 1;
  for (int i = 0; i < dim; ++i) total *= m;
  TensorGrid grid{Matrix(dim, total), Vector(total)};
  std::vector<Eigen::Index> idx(dim, 0);
  for (Eigen::Index n = 0; n < total; ++n) {
    double w = 1.0;
    for (int i = 0; i < dim; ++i) {
      grid.points(i, n) = axis_rule.nodes[idx[i]];
      w *= axis_rule.weights[idx[i]];
    }
    grid.weights(n) = w;
    for (int i = 0; i < dim; ++i) {
      if (++idx[i] < m) break;
      idx[i] = 0;
    }
  }
  return grid;
}

TensorGrid jump_domain_grid(int order, int dim, double r) {
  std::vector<double> breaks{-r};
  if (r > 1.0) {
    breaks.push_back(-1.0);
    breaks.push_back(1.0);
  }
  breaks.push_back(r);
  return tensor_grid(composite_gauss_legendre(order, breaks), dim);
}

}  // namespace jumpcons
