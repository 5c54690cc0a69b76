#include "pbpk/network.hpp"

#include <algorithm>
#include <cctype>
#include <random>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>

#include "pbpk/dataio.hpp"

namespace pbpk {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

}  // namespace

std::string_view activation_name(Activation a) {
  switch (a) {
    case Activation::Tanh: return "tanh";
    case Activation::Sigmoid: return "sigmoid";
    case Activation::ReLU: return "relu";
    case Activation::Sin: return "sin";
  }
  return "?";
}

std::optional<Activation> activation_from_name(std::string_view name) {
  const std::string n = lower(name);
  if (n == "tanh") return Activation::Tanh;
  if (n == "sigmoid") return Activation::Sigmoid;
  if (n == "relu") return Activation::ReLU;
  if (n == "sin" || n == "sine") return Activation::Sin;
  return std::nullopt;
}

std::string_view initializer_name(Initializer i) {
  return i == Initializer::GlorotUniform ? "glorot-uniform" : "glorot-normal";
}

std::optional<Initializer> initializer_from_name(std::string_view name) {
  std::string n = lower(name);
  std::replace(n.begin(), n.end(), '_', '-');
  std::replace(n.begin(), n.end(), ' ', '-');
  if (n == "glorot-uniform") return Initializer::GlorotUniform;
  if (n == "glorot-normal") return Initializer::GlorotNormal;
  return std::nullopt;
}

void NetworkConfig::validate() const {
  if (input_dim != 1) throw std::invalid_argument("network input dimension must be 1");
  if (output_dim < 1) throw std::invalid_argument("network output dimension must be positive");
  if (hidden_layers < 1) throw std::invalid_argument("network needs at least one hidden layer");
  if (neurons < 1) throw std::invalid_argument("network needs at least one neuron per layer");
  if (!(omega > 0.0) || !std::isfinite(omega)) throw std::invalid_argument("sin frequency must be positive");
}

std::size_t Network::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
  return n;
}

Eigen::VectorXd Network::flatten() const {
  Eigen::VectorXd out(static_cast<Eigen::Index>(parameter_count()));
  Eigen::Index k = 0;
  for (const auto& l : layers) {
    for (Eigen::Index i = 0; i < l.weight.rows(); ++i) {
      for (Eigen::Index j = 0; j < l.weight.cols(); ++j) out(k++) = l.weight(i, j);
    }
    for (Eigen::Index i = 0; i < l.bias.size(); ++i) out(k++) = l.bias(i);
  }
  return out;
}

void Network::assign(std::span<const double> flat) {
  if (flat.size() < parameter_count()) throw std::invalid_argument("Network::assign: vector too short");
  std::size_t k = 0;
  for (auto& l : layers) {
    for (Eigen::Index i = 0; i < l.weight.rows(); ++i) {
      for (Eigen::Index j = 0; j < l.weight.cols(); ++j) l.weight(i, j) = flat[k++];
    }
    for (Eigen::Index i = 0; i < l.bias.size(); ++i) l.bias(i) = flat[k++];
  }
}

Network init_network(const NetworkConfig& cfg) {
  cfg.validate();
  Network net;
  net.config = cfg;
  std::mt19937_64 rng(cfg.seed);
  int fan_in = cfg.input_dim;
  for (int l = 0; l <= cfg.hidden_layers; ++l) {
    const int fan_out = l < cfg.hidden_layers ? cfg.neurons : cfg.output_dim;
    Layer layer;
    layer.weight.resize(fan_out, fan_in);
    layer.bias = Eigen::VectorXd::Zero(fan_out);
    const double denom = static_cast<double>(fan_in + fan_out);
    if (cfg.initializer == Initializer::GlorotUniform) {
      const double limit = std::sqrt(6.0 / denom);
      std::uniform_real_distribution<double> dist(-limit, limit);
      for (Eigen::Index i = 0; i < layer.weight.rows(); ++i) {
        for (Eigen::Index j = 0; j < layer.weight.cols(); ++j) layer.weight(i, j) = dist(rng);
      }
    } else {
      std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / denom));
      for (Eigen::Index i = 0; i < layer.weight.rows(); ++i) {
        for (Eigen::Index j = 0; j < layer.weight.cols(); ++j) layer.weight(i, j) = dist(rng);
      }
    }
    net.layers.push_back(std::move(layer));
    fan_in = fan_out;
  }
  return net;
}

Eigen::VectorXd forward(const Network& net, double t_hat) {
  const auto z = forward_generic<double>(net, t_hat);
  return Eigen::Map<const Eigen::VectorXd>(z.data(), static_cast<Eigen::Index>(z.size()));
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> forward_with_time_derivative(const Network& net, double t_hat) {
  const auto z = forward_generic<Dual<double>>(net, Dual<double>::variable(t_hat));
  Eigen::VectorXd y(static_cast<Eigen::Index>(z.size()));
  Eigen::VectorXd dy(static_cast<Eigen::Index>(z.size()));
  for (std::size_t i = 0; i < z.size(); ++i) {
    y(static_cast<Eigen::Index>(i)) = z[i].value;
    dy(static_cast<Eigen::Index>(i)) = z[i].deriv;
  }
  return {y, dy};
}

// ---------------------------------------------------------------------------

NetworkVars register_network(ad::Tape& tape, const Network& net) {
  NetworkVars vars;
  for (const auto& l : net.layers) {
    vars.weights.push_back(tape.variable(l.weight));
    vars.biases.push_back(tape.variable(ad::Matrix(l.bias)));
  }
  return vars;
}

std::pair<ad::Var, ad::Var> forward_batch(ad::Tape& tape, const NetworkVars& vars, const NetworkConfig& cfg,
                                          const Eigen::RowVectorXd& t_hat) {
  using ad::Var;
  Var z = tape.constant(ad::Matrix(t_hat));
  Var dz = tape.constant(ad::Matrix::Ones(1, t_hat.size()));
  const std::size_t n_layers = vars.weights.size();
  for (std::size_t l = 0; l < n_layers; ++l) {
    const Var pre = add_bias(matmul(vars.weights[l], z), vars.biases[l]);
    const Var dpre = matmul(vars.weights[l], dz);
    if (l + 1 == n_layers) {
      z = pre;
      dz = dpre;
      break;
    }
    switch (cfg.activation) {
      case Activation::Tanh:
        z = tanh(pre);
        dz = affine(square(z), -1.0, 1.0) * dpre;
        break;
      case Activation::Sigmoid:
        z = sigmoid(pre);
        dz = (z * affine(z, -1.0, 1.0)) * dpre;
        break;
      case Activation::ReLU:
        z = relu(pre);
        dz = step(pre) * dpre;
        break;
      case Activation::Sin: {
        const Var u = affine(pre, cfg.omega, 0.0);
        z = sin(u);
        dz = affine(cos(u), cfg.omega, 0.0) * dpre;
        break;
      }
    }
  }
  return {z, dz};
}

Eigen::MatrixXd predict_batch(const Network& net, const Eigen::RowVectorXd& t_hat) {
  Eigen::MatrixXd z = t_hat;
  const std::size_t n_layers = net.layers.size();
  for (std::size_t l = 0; l < n_layers; ++l) {
    Eigen::MatrixXd pre = net.layers[l].weight * z;
    pre.colwise() += net.layers[l].bias;
    if (l + 1 == n_layers) return pre;
    z = pre.unaryExpr([&](double x) { return activate(net.config.activation, net.config.omega, x); });
  }
  return z;
}

// ---------------------------------------------------------------------------

std::string format_network(const Network& net) {
  const auto& c = net.config;
  std::string out = "pbpk-ipinn-network 1\n";
  out += fmt::format("activation {}\nomega {}\ninitializer {}\nseed {}\n", activation_name(c.activation),
                     format_number(c.omega), initializer_name(c.initializer), c.seed);
  out += fmt::format("input_dim {}\nhidden_layers {}\nneurons {}\noutput_dim {}\n", c.input_dim, c.hidden_layers,
                     c.neurons, c.output_dim);
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const auto& layer = net.layers[l];
    out += fmt::format("layer {} {} {}\n", l, layer.weight.rows(), layer.weight.cols());
    for (Eigen::Index i = 0; i < layer.weight.rows(); ++i) {
      for (Eigen::Index j = 0; j < layer.weight.cols(); ++j) {
        if (j) out += ' ';
        out += format_number(layer.weight(i, j));
      }
      out += '\n';
    }
    out += "bias";
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) out += ' ' + format_number(layer.bias(i));
    out += '\n';
  }
  return out;
}

Network parse_network(std::string_view text) {
  std::istringstream in{std::string(text)};
  auto fail = [](const std::string& what) -> void {
    throw DataError(DataError::Kind::Format, what, "malformed network checkpoint: " + what);
  };
  auto expect_key = [&](const char* key) {
    std::string k;
    if (!(in >> k) || k != key) fail(std::string("expected '") + key + "'");
  };
  std::string magic;
  int version = 0;
  if (!(in >> magic >> version) || magic != "pbpk-ipinn-network" || version != 1) fail("header");

  Network net;
  auto& c = net.config;
  std::string word;
  expect_key("activation");
  in >> word;
  const auto act = activation_from_name(word);
  if (!act) fail("activation");
  c.activation = *act;
  expect_key("omega");
  in >> word;
  c.omega = parse_double(word);
  expect_key("initializer");
  in >> word;
  const auto init = initializer_from_name(word);
  if (!init) fail("initializer");
  c.initializer = *init;
  expect_key("seed");
  in >> c.seed;
  expect_key("input_dim");
  in >> c.input_dim;
  expect_key("hidden_layers");
  in >> c.hidden_layers;
  expect_key("neurons");
  in >> c.neurons;
  expect_key("output_dim");
  in >> c.output_dim;
  if (!in) fail("config block");
  c.validate();

  int fan_in = c.input_dim;
  for (int l = 0; l <= c.hidden_layers; ++l) {
    std::size_t index = 0;
    Eigen::Index rows = 0, cols = 0;
    expect_key("layer");
    if (!(in >> index >> rows >> cols) || index != static_cast<std::size_t>(l)) fail("layer header");
    const int expected_rows = l < c.hidden_layers ? c.neurons : c.output_dim;
    if (rows != expected_rows || cols != fan_in) fail("layer shape");
    Layer layer;
    layer.weight.resize(rows, cols);
    layer.bias.resize(rows);
    for (Eigen::Index i = 0; i < rows; ++i) {
      for (Eigen::Index j = 0; j < cols; ++j) {
        if (!(in >> word)) fail("weights");
        layer.weight(i, j) = parse_double(word);
      }
    }
    expect_key("bias");
    for (Eigen::Index i = 0; i < rows; ++i) {
      if (!(in >> word)) fail("bias");
      layer.bias(i) = parse_double(word);
    }
    net.layers.push_back(std::move(layer));
    fan_in = static_cast<int>(rows);
  }
  return net;
}

void save_network(const Network& net, const std::filesystem::path& path) { write_text(path, format_network(net)); }

Network load_network(const std::filesystem::path& path) { return parse_network(read_text(path)); }

}  // namespace pbpk
