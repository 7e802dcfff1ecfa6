#pragma once

#include <Eigen/Dense>

namespace jumpcons {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

}  // namespace jumpcons
