#pragma once

#include <functional>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace pbpk {

/// Raised by optimizers when a gradient contains NaN or Inf.
class NonFiniteGradientError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  long step = 0;
  Eigen::VectorXd m;
  Eigen::VectorXd v;
};

/// One bias-corrected Adam update of `params` in place. The state is left
/// untouched when the gradient is not finite.
void adam_step(AdamState& state, Eigen::VectorXd& params, const Eigen::VectorXd& grad, double learning_rate);

/// f(x, grad) returns the objective and writes the gradient.
using Objective = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd& grad)>;

struct LbfgsOptions {
  int history = 10;
  long max_iterations = 500;
  double gradient_tolerance = 1e-10;  // on the max-norm of the gradient
  double armijo = 1e-4;
  int max_backtracks = 60;
};

struct LbfgsResult {
  Eigen::VectorXd x;        // best point seen
  double value = 0.0;       // objective at x
  double start_value = 0.0;
  long iterations = 0;      // accepted steps
  long evaluations = 0;
  bool converged = false;
  bool line_search_failed = false;
};

/// Two-loop-recursion L-BFGS with backtracking Armijo line search. Never
/// returns a point worse than `start`.
LbfgsResult lbfgs_refine(const Objective& f, Eigen::VectorXd start, const LbfgsOptions& options = {});

}  // namespace pbpk
