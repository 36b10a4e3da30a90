#pragma once

#include <Eigen/Dense>

namespace sigforecast {

// Time-major matrices ([steps x columns]) are row-major throughout.
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

}  // namespace sigforecast
