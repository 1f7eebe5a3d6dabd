#pragma once

#include <Eigen/Dense>

namespace h2nc {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Point = Eigen::Vector3d;

} // namespace h2nc
