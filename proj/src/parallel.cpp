#include "pbpk/parallel.hpp"

#include <algorithm>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace pbpk {

Eigen::MatrixXd predict_points_serial(const Network& net, const Eigen::RowVectorXd& t_hat) {
  Eigen::MatrixXd out(net.config.output_dim, t_hat.size());
  for (Eigen::Index i = 0; i < t_hat.size(); ++i) out.col(i) = forward(net, t_hat(i));
  return out;
}

Eigen::MatrixXd predict_points_parallel(const Network& net, const Eigen::RowVectorXd& t_hat) {
  Eigen::MatrixXd out(net.config.output_dim, t_hat.size());
  const long n = static_cast<long>(t_hat.size());
#pragma omp parallel for schedule(static)
  for (long i = 0; i < n; ++i) out.col(i) = forward(net, t_hat(i));
  return out;
}

int parallel_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void set_parallel_threads(int n) {
#ifdef _OPENMP
  omp_set_num_threads(std::max(1, n));
#else
  (void)n;
#endif
}

}  // namespace pbpk
