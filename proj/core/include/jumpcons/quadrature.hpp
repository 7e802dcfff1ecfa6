#pragma once

#include <span>
#include <vector>

#include "jumpcons/types.hpp"

namespace jumpcons {

struct QuadratureRule1D {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Gauss-Legendre rule with `order` nodes on [a, b].
QuadratureRule1D gauss_legendre(int order, double a, double b);

/// Composite Gauss-Legendre: one `order`-point panel between each pair of
/// consecutive breakpoints. Breakpoints must be sorted.
QuadratureRule1D composite_gauss_legendre(int order, std::span<const double> breakpoints);

/// Tensor product of a 1-D rule over `dim` axes. Points are columns.
struct TensorGrid {
  Matrix points;   // dim x N
  Vector weights;  // N
};

TensorGrid tensor_grid(const QuadratureRule1D& axis_rule, int dim);

/// Grid on the box [-r, r]^dim with panels split at +-1 when 1 < r, so the
/// unit-ball indicator used by jump compensators is resolved on each axis.
TensorGrid jump_domain_grid(int order, int dim, double r);

}  // namespace jumpcons
