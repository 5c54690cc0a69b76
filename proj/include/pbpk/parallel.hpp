#pragma once

// Point-wise batched network evaluation. The serial loop is the reference;
// the OpenMP variant splits the same loop over threads and produces
// bit-identical output because every column is computed independently.

#include <Eigen/Dense>

#include "pbpk/network.hpp"

namespace pbpk {

/// Network outputs (output_dim x N) at each normalized time.
Eigen::MatrixXd predict_points_serial(const Network& net, const Eigen::RowVectorXd& t_hat);
Eigen::MatrixXd predict_points_parallel(const Network& net, const Eigen::RowVectorXd& t_hat);

/// Threads available to OpenMP regions (1 when built without OpenMP).
int parallel_threads();
/// Sets the OpenMP thread count for subsequent parallel regions.
void set_parallel_threads(int n);

}  // namespace pbpk
