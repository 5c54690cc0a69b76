#pragma once

// Fully-connected surrogate Y(t_hat): affine-then-activation hidden layers and
// an affine output layer. Scalar evaluation paths (plain and dual) and a
// batched tape path used for training.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "pbpk/dual.hpp"
#include "pbpk/tape.hpp"

namespace pbpk {

enum class Activation { Tanh, Sigmoid, ReLU, Sin };
enum class Initializer { GlorotUniform, GlorotNormal };

std::string_view activation_name(Activation a);
std::optional<Activation> activation_from_name(std::string_view name);
std::string_view initializer_name(Initializer i);
std::optional<Initializer> initializer_from_name(std::string_view name);

struct NetworkConfig {
  int input_dim = 1;
  int hidden_layers = 6;
  int neurons = 50;
  int output_dim = 4;
  Activation activation = Activation::Tanh;
  double omega = 1.0;  // Sin frequency
  Initializer initializer = Initializer::GlorotNormal;
  std::uint64_t seed = 0;

  /// Throws std::invalid_argument on c < 1, b < 1, omega <= 0 or bad dims.
  void validate() const;
};

struct Layer {
  Eigen::MatrixXd weight;  // fan_out x fan_in
  Eigen::VectorXd bias;
};

struct Network {
  NetworkConfig config;
  std::vector<Layer> layers;  // hidden_layers + 1 entries

  std::size_t parameter_count() const;
  /// Row-major weights then bias, layer by layer.
  Eigen::VectorXd flatten() const;
  void assign(std::span<const double> flat);
};

Network init_network(const NetworkConfig& cfg);

// ---------------------------------------------------------------------------
// Activations on scalars and duals

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline double activate(Activation a, double omega, double x) {
  switch (a) {
    case Activation::Tanh: return std::tanh(x);
    case Activation::Sigmoid: return sigmoid(x);
    case Activation::ReLU: return x > 0.0 ? x : 0.0;
    case Activation::Sin: return std::sin(omega * x);
  }
  return x;
}

inline Dual<double> activate(Activation a, double omega, const Dual<double>& x) {
  switch (a) {
    case Activation::Tanh: {
      const double t = std::tanh(x.value);
      return {t, (1.0 - t * t) * x.deriv};
    }
    case Activation::Sigmoid: {
      const double s = sigmoid(x.value);
      return {s, s * (1.0 - s) * x.deriv};
    }
    case Activation::ReLU:
      // subgradient 0 at the kink
      return x.value > 0.0 ? x : Dual<double>(0.0, 0.0);
    case Activation::Sin: {
      const double u = omega * x.value;
      return {std::sin(u), omega * std::cos(u) * x.deriv};
    }
  }
  return x;
}

/// Scalar forward pass, written as explicit loops so the double and dual
/// instantiations perform the same value arithmetic in the same order.
template <typename S>
std::vector<S> forward_generic(const Network& net, const S& input) {
  std::vector<S> z{input};
  const std::size_t n_layers = net.layers.size();
  for (std::size_t l = 0; l < n_layers; ++l) {
    const Layer& layer = net.layers[l];
    const bool hidden = l + 1 < n_layers;
    std::vector<S> next(static_cast<std::size_t>(layer.weight.rows()));
    for (Eigen::Index i = 0; i < layer.weight.rows(); ++i) {
      S acc = S(layer.bias(i));
      for (Eigen::Index j = 0; j < layer.weight.cols(); ++j) {
        acc = acc + S(layer.weight(i, j)) * z[static_cast<std::size_t>(j)];
      }
      next[static_cast<std::size_t>(i)] =
          hidden ? activate(net.config.activation, net.config.omega, acc) : acc;
    }
    z = std::move(next);
  }
  return z;
}

Eigen::VectorXd forward(const Network& net, double t_hat);

/// Output and d(output)/d(t_hat) from one dual-number pass.
std::pair<Eigen::VectorXd, Eigen::VectorXd> forward_with_time_derivative(const Network& net, double t_hat);

// ---------------------------------------------------------------------------
// Batched tape evaluation

/// Network weights registered as tape leaves: W1, b1, W2, b2, ...
struct NetworkVars {
  std::vector<ad::Var> weights;
  std::vector<ad::Var> biases;
};

NetworkVars register_network(ad::Tape& tape, const Network& net);

/// Evaluates the network at every entry of `t_hat` (one column per point).
/// Returns (Y, dY/dt_hat), each output_dim x N.
std::pair<ad::Var, ad::Var> forward_batch(ad::Tape& tape, const NetworkVars& vars, const NetworkConfig& cfg,
                                          const Eigen::RowVectorXd& t_hat);

/// Value-only batched evaluation without a tape (output_dim x N).
Eigen::MatrixXd predict_batch(const Network& net, const Eigen::RowVectorXd& t_hat);

// ---------------------------------------------------------------------------
// Checkpoints

std::string format_network(const Network& net);
Network parse_network(std::string_view text);
void save_network(const Network& net, const std::filesystem::path& path);
Network load_network(const std::filesystem::path& path);

}  // namespace pbpk
