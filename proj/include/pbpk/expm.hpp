#pragma once

#include <Eigen/Dense>

namespace pbpk {

/// Matrix exponential by scaling and squaring with the degree-13 diagonal
/// Pade approximant (Higham 2005). Accurate to machine precision for any
/// matrix whose exponential is well conditioned.
Eigen::MatrixXd expm(const Eigen::MatrixXd& a);

}  // namespace pbpk
