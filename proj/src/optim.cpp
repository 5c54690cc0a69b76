#include "pbpk/optim.hpp"

#include <cmath>
#include <deque>

namespace pbpk {

void adam_step(AdamState& state, Eigen::VectorXd& params, const Eigen::VectorXd& grad, double learning_rate) {
  if (grad.size() != params.size()) throw std::invalid_argument("adam_step: gradient size mismatch");
  if (!grad.allFinite()) throw NonFiniteGradientError("adam_step: non-finite gradient");
  if (state.m.size() != params.size()) {
    state.m = Eigen::VectorXd::Zero(params.size());
    state.v = Eigen::VectorXd::Zero(params.size());
    state.step = 0;
  }
  ++state.step;
  state.m = state.beta1 * state.m + (1.0 - state.beta1) * grad;
  state.v = state.beta2 * state.v + (1.0 - state.beta2) * grad.cwiseProduct(grad);
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  params.array() -= learning_rate * (state.m.array() / c1) / ((state.v.array() / c2).sqrt() + state.epsilon);
}

LbfgsResult lbfgs_refine(const Objective& f, Eigen::VectorXd start, const LbfgsOptions& options) {
  LbfgsResult result;
  const Eigen::Index n = start.size();
  Eigen::VectorXd x = std::move(start);
  Eigen::VectorXd g(n);
  double fx = f(x, g);
  ++result.evaluations;
  if (!std::isfinite(fx) || !g.allFinite()) throw std::invalid_argument("lbfgs_refine: objective not finite at start");
  result.start_value = fx;
  result.x = x;
  result.value = fx;

  std::deque<Eigen::VectorXd> s_hist;
  std::deque<Eigen::VectorXd> y_hist;
  std::deque<double> rho_hist;

  Eigen::VectorXd x_new(n);
  Eigen::VectorXd g_new(n);
  for (long it = 0; it < options.max_iterations; ++it) {
    if (g.lpNorm<Eigen::Infinity>() <= options.gradient_tolerance) {
      result.converged = true;
      break;
    }

    // two-loop recursion: d = -H g
    Eigen::VectorXd q = g;
    const std::size_t m = s_hist.size();
    std::vector<double> alpha(m);
    for (std::size_t i = m; i-- > 0;) {
      alpha[i] = rho_hist[i] * s_hist[i].dot(q);
      q -= alpha[i] * y_hist[i];
    }
    double gamma = 1.0;
    if (m > 0) {
      gamma = s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
    } else {
      gamma = 1.0 / std::max(1.0, g.lpNorm<Eigen::Infinity>());
    }
    Eigen::VectorXd d = gamma * q;
    for (std::size_t i = 0; i < m; ++i) {
      const double beta = rho_hist[i] * y_hist[i].dot(d);
      d += (alpha[i] - beta) * s_hist[i];
    }
    d = -d;

    double slope = g.dot(d);
    if (!(slope < 0.0)) {
      // not a descent direction: restart from steepest descent
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
      d = -g / std::max(1.0, g.lpNorm<Eigen::Infinity>());
      slope = g.dot(d);
    }

    double step = 1.0;
    bool accepted = false;
    double f_new = fx;
    for (int bt = 0; bt < options.max_backtracks; ++bt) {
      x_new = x + step * d;
      f_new = f(x_new, g_new);
      ++result.evaluations;
      if (std::isfinite(f_new) && g_new.allFinite() && f_new <= fx + options.armijo * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      result.line_search_failed = true;
      break;
    }

    const Eigen::VectorXd s = x_new - x;
    const Eigen::VectorXd y = g_new - g;
    const double sy = s.dot(y);
    if (sy > 1e-16 * s.norm() * y.norm()) {
      if (static_cast<int>(s_hist.size()) == options.history) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
      s_hist.push_back(s);
      y_hist.push_back(y);
      rho_hist.push_back(1.0 / sy);
    }

    const bool stalled = f_new == fx && s.lpNorm<Eigen::Infinity>() == 0.0;
    x = x_new;
    g = g_new;
    fx = f_new;
    ++result.iterations;
    if (fx < result.value) {
      result.value = fx;
      result.x = x;
    }
    if (stalled) {
      result.converged = true;
      break;
    }
  }
  if (g.lpNorm<Eigen::Infinity>() <= options.gradient_tolerance) result.converged = true;
  return result;
}

}  // namespace pbpk
