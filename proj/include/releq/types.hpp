#pragma once

#include <Eigen/Dense>

namespace releq {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline constexpr double kDefaultFdStep = 1e-6;

} // namespace releq
