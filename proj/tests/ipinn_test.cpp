#include <doctest.h>

#include <cmath>
#include <random>

#include "pbpk/ipinn.hpp"
#include "pbpk/ode.hpp"

using namespace pbpk;

namespace {

ConcentrationSeries small_dataset(std::size_t n = 10) {
  const ModelParams p;
  return synthesize_dataset(p.sys, p.drug, PlasmaSpec{}, ModelVariant::PaperLiteral, n, 48.0, 0.0, 1);
}

NetworkConfig tiny(Activation a, std::uint64_t seed) {
  NetworkConfig c;
  c.hidden_layers = 2;
  c.neurons = 6;
  c.activation = a;
  c.seed = seed;
  return c;
}

Network zero_net(const NetworkConfig& c) {
  Network net = init_network(c);
  for (auto& l : net.layers) {
    l.weight.setZero();
    l.bias.setZero();
  }
  return net;
}

}  // namespace

TEST_CASE("constrain examples") {
  CHECK(constrain({ParamId::Vbb, 0.0, 2.0, 0.0}) == 1.0);
  CHECK(std::abs(constrain({ParamId::Vbb, 0.0, 2.0, 50.0}) - 2.0) <= 1e-15);
  CHECK(constrain({ParamId::fubb, 0.01, 0.20, 0.0}) == doctest::Approx(0.105).epsilon(1e-15));
  const BoundedParam p{ParamId::Vbm, 0.5, 3.0, 0.0};
  double previous = -1.0;
  for (double raw = -30.0; raw <= 30.0; raw += 0.5) {
    const BoundedParam q{p.id, p.min, p.max, raw};
    const double v = constrain(q);
    CHECK(v >= p.min);
    CHECK(v <= p.max);
    CHECK(v > previous);
    previous = v;
    if (std::abs(raw) < 20.0) CHECK(unconstrain(p, v) == doctest::Approx(raw).epsilon(1e-9));
  }
  CHECK_THROWS_AS(unconstrain(p, 4.0), std::invalid_argument);
}

TEST_CASE("scaled bounds and estimation setup validation") {
  const ModelParams ref;
  const auto spec = EstimationSpec::scaled_bounds(default_free_params(), ref);
  REQUIRE(spec.free.size() == 6);
  CHECK(spec.names() == std::vector<std::string>{"Vbb", "Vbm", "Vccsf", "Vscsf", "fubb", "lam_ccsf"});
  CHECK(spec.free[0].min == 0.5 * ref.sys.Vbb);
  CHECK(spec.free[0].max == 2.0 * ref.sys.Vbb);
  const auto mid = spec.materialize();
  CHECK(mid.sys.Vbb == doctest::Approx(1.25 * ref.sys.Vbb).epsilon(1e-15));
  CHECK(mid.sys.Qbrain == ref.sys.Qbrain);

  const auto fu = EstimationSpec::scaled_bounds({ParamId::fuccsf}, ref);
  CHECK(fu.free[0].max == 1.0);
  CHECK_THROWS_AS(EstimationSpec::scaled_bounds({ParamId::CLBin}, ref), std::invalid_argument);

  EstimationSpec dup = spec;
  dup.free.push_back(dup.free[0]);
  CHECK_THROWS_AS(dup.validate(), std::invalid_argument);
  EstimationSpec bad = spec;
  bad.free[1].max = bad.free[1].min;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("loss weights validation") {
  LossWeights w;
  CHECK_NOTHROW(w.validate());
  w.ode[2] = -1.0;
  CHECK_THROWS_AS(w.validate(), std::invalid_argument);
  LossWeights z;
  z.ic.fill(0.0);
  z.ode.fill(0.0);
  z.data.fill(0.0);
  CHECK_THROWS_AS(z.validate(), std::invalid_argument);
}

TEST_CASE("data loss examples") {
  const NetworkConfig c = tiny(Activation::Tanh, 1);
  Network net = zero_net(c);
  const SurrogateView view{net, 1.0};
  ConcentrationSeries zeros;
  zeros.push_back(0.0, {0, 0, 0, 0});
  zeros.push_back(1.0, {0, 0, 0, 0});
  CHECK(data_loss(view, zeros) == 0.0);

  net.layers.back().bias << 1.0, 0.0, 0.0, 0.0;
  CHECK(data_loss(view, zeros) == 1.0);

  net.layers.back().bias.setZero();
  ConcentrationSeries two;
  two.push_back(0.0, {1.0, 0, 0, 0});
  two.push_back(1.0, {2.0, 0, 0, 0});
  CHECK(data_loss(view, two) == 2.5);
  CHECK(data_loss(view, two, {2.0, 1.0, 1.0, 1.0}) == 5.0);
}

TEST_CASE("ic loss examples") {
  Network net = zero_net(tiny(Activation::Tanh, 1));
  const SurrogateView view{net, 48.0};
  CHECK(ic_loss(view, {0, 0, 0, 0}) == 0.0);
  net.layers.back().bias << 1.0, 0.0, 0.0, 0.0;
  CHECK(ic_loss(view, {0, 0, 0, 0}) == 1.0);
  CHECK(ic_loss(view, {0, 0, 0, 0}, {2.0, 1.0, 1.0, 1.0}) == 2.0);
}

TEST_CASE("ode loss examples") {
  const Network net = zero_net(tiny(Activation::Tanh, 1));
  const SurrogateView view{net, 48.0};
  const ModelParams ref;
  const auto spec = EstimationSpec::scaled_bounds(default_free_params(), ref);
  const std::vector<double> colloc{0.0, 5.0, 12.5, 48.0};
  const auto zero = PlasmaProfile::constant(0.0, 0.0, 48.0);
  CHECK(ode_loss(view, spec, zero, colloc) == 0.0);

  const PlasmaProfile plasma({0.0, 10.0, 48.0}, {0.0, 0.05, 0.01});
  const double vbb = spec.materialize().sys.Vbb;
  double expected = 0.0;
  for (double t : colloc) {
    const double f = ref.sys.Qbrain * linear_interp(plasma, t) / vbb;
    expected += f * f;
  }
  expected /= static_cast<double>(colloc.size());
  CHECK(ode_loss(view, spec, plasma, colloc) == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("ode residual of a transport-free system is the squared time derivative") {
  NetworkConfig c;
  c.hidden_layers = 1;
  c.neurons = 1;
  c.activation = Activation::Sin;
  Network net = zero_net(c);
  net.layers[0].weight(0, 0) = 1.0;
  net.layers[1].weight(3, 0) = 1.0;  // Cscsf(t) = sin(t)
  ModelParams p;
  for (const auto& info : param_table()) p[info.id] = info.kind == ParamKind::Volume ? 1.0 : 0.0;
  const SurrogateView view{net, 1.0};
  const auto zero = PlasmaProfile::constant(0.0, 0.0, 1.0);
  const std::vector<double> colloc{0.1, 0.4, 0.9};
  const auto comps = ode_loss_components(view, p, zero, colloc, ModelVariant::PaperLiteral);
  double expected = 0.0;
  for (double t : colloc) expected += std::cos(t) * std::cos(t);
  CHECK(comps[3] == doctest::Approx(expected / 3.0).epsilon(1e-14));
  CHECK(comps[0] == 0.0);
}

TEST_CASE("tape and scalar loss evaluations agree") {
  const auto data = small_dataset();
  const auto spec = EstimationSpec::scaled_bounds(default_free_params(), ModelParams{});
  for (Activation a : {Activation::Tanh, Activation::Sigmoid, Activation::ReLU, Activation::Sin}) {
    TrainConfig cfg;
    cfg.extra_collocation = 3;
    const PinnProblem prob(data, spec, tiny(a, 9), cfg);
    Eigen::VectorXd psi = prob.pack(prob.network_template(), spec);
    psi.tail(6) << 0.3, -0.2, 1.1, -0.7, 0.05, 2.0;
    const auto tape = prob.evaluate(psi, nullptr);
    const auto scalar = prob.evaluate_scalar(psi);
    CHECK(tape.total == doctest::Approx(scalar.total).epsilon(1e-12));
    for (std::size_t k = 0; k < 4; ++k) {
      CHECK(tape.data[k] == doctest::Approx(scalar.data[k]).epsilon(1e-12));
      CHECK(tape.ode[k] == doctest::Approx(scalar.ode[k]).epsilon(1e-12));
      CHECK(tape.ic[k] == doctest::Approx(scalar.ic[k]).epsilon(1e-12));
    }
    CHECK(std::abs(tape.weighted(cfg.weights) - tape.total) <= 1e-12 * tape.total);
  }
}

TEST_CASE("composite loss gradient matches central differences") {
  const auto data = small_dataset();
  const auto spec = EstimationSpec::scaled_bounds(default_free_params(), ModelParams{});
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n(0.0, 0.5);
  for (Activation a : {Activation::Tanh, Activation::Sigmoid, Activation::ReLU, Activation::Sin}) {
    TrainConfig cfg;
    cfg.scale_outputs = true;
    const PinnProblem prob(data, spec, tiny(a, 31), cfg);
    Eigen::VectorXd psi = prob.pack(prob.network_template(), spec);
    std::normal_distribution<double> jitter(0.0, 0.05);
    for (Eigen::Index i = 0; i < psi.size() - 6; ++i) psi(i) += jitter(rng);
    for (Eigen::Index i = psi.size() - 6; i < psi.size(); ++i) psi(i) = n(rng);
    Eigen::VectorXd g;
    const double loss = prob.evaluate(psi, &g).total;
    const double floor = 1e-8 * std::max(1.0, std::abs(loss));
    const double h = 1e-5;
    for (Eigen::Index i = 0; i < psi.size(); ++i) {
      Eigen::VectorXd p = psi, m = psi;
      p(i) += h;
      m(i) -= h;
      const double fd = (prob.evaluate_scalar(p).total - prob.evaluate_scalar(m).total) / (2.0 * h);
      const double scale = std::max(std::abs(fd), std::abs(g(i)));
      CHECK(std::abs(g(i) - fd) <= std::max(1e-4 * scale, floor));
    }
  }
}

TEST_CASE("zero iterations returns the initial state with one log entry") {
  const auto data = small_dataset();
  const auto spec = EstimationSpec::scaled_bounds(default_free_params(), ModelParams{});
  TrainConfig cfg;
  cfg.iterations = 0;
  const auto r = train(data, spec, tiny(Activation::Tanh, 2), cfg);
  REQUIRE(r.artifacts.losses.size() == 1);
  CHECK(r.artifacts.params.size() == 1);
  CHECK(r.network.flatten() == init_network(tiny(Activation::Tanh, 2)).flatten());
  for (std::size_t i = 0; i < spec.free.size(); ++i) {
    CHECK(r.spec.free[i].raw == 0.0);
    CHECK(r.artifacts.params[0].values[i] == doctest::Approx(0.5 * (spec.free[i].min + spec.free[i].max)));
  }
  CHECK(r.artifacts.prediction.size() == cfg.prediction_points);
}

TEST_CASE("training is deterministic, logs on stride and keeps parameters in bounds") {
  const auto data = small_dataset(20);
  const auto spec = EstimationSpec::scaled_bounds(default_free_params(), ModelParams{});
  TrainConfig cfg;
  cfg.iterations = 250;
  cfg.log_stride = 100;
  cfg.learning_rate = 1e-3;
  cfg.lbfgs_iterations = 5;
  const auto a = train(data, spec, tiny(Activation::Tanh, 5), cfg);
  const auto b = train(data, spec, tiny(Activation::Tanh, 5), cfg);
  CHECK(a.network.flatten() == b.network.flatten());
  REQUIRE(a.artifacts.losses.size() == b.artifacts.losses.size());
  std::vector<long> iters;
  for (const auto& l : a.artifacts.losses) iters.push_back(l.iteration);
  REQUIRE(iters.size() >= 4);
  CHECK(iters[0] == 0);
  CHECK(iters[1] == 100);
  CHECK(iters[2] == 200);
  CHECK(iters[3] == 250);
  for (std::size_t i = 1; i < iters.size(); ++i) CHECK(iters[i] > iters[i - 1]);
  for (std::size_t i = 0; i < a.logged.size(); ++i) {
    CHECK(std::abs(a.logged[i].weighted(cfg.weights) - a.artifacts.losses[i].total) <=
          1e-12 * a.artifacts.losses[i].total);
    for (std::size_t j = 0; j < spec.free.size(); ++j) {
      const double v = a.artifacts.params[i].values[j];
      CHECK(v > spec.free[j].min);
      CHECK(v < spec.free[j].max);
    }
  }
  CHECK(a.best_loss.total <= a.artifacts.losses.front().total);
}

TEST_CASE("divergence guard stops training and keeps artifacts") {
  const auto data = small_dataset(20);
  const auto spec = EstimationSpec::scaled_bounds(default_free_params(), ModelParams{});
  TrainConfig cfg;
  cfg.iterations = 50;
  cfg.divergence_threshold = 1e-30;
  const auto r = train(data, spec, tiny(Activation::Tanh, 5), cfg);
  REQUIRE(r.failure.has_value());
  CHECK(r.failure->kind == TrainFailure::Kind::Diverged);
  CHECK(r.failure->iteration == 0);
  CHECK(r.artifacts.losses.size() == 1);
}

TEST_CASE("pure regression drives the data loss down") {
  const auto data = small_dataset(40);
  const auto spec = EstimationSpec::scaled_bounds(default_free_params(), ModelParams{});
  TrainConfig cfg;
  cfg.iterations = 3000;
  cfg.learning_rate = 1e-3;
  cfg.log_stride = 3000;
  cfg.scale_outputs = true;
  cfg.weights.ic.fill(0.0);
  cfg.weights.ode.fill(0.0);
  NetworkConfig nc;
  nc.hidden_layers = 2;
  nc.neurons = 20;
  nc.seed = 3;
  const auto r = train(data, spec, nc, cfg);
  CHECK(r.artifacts.losses.back().data < 0.01 * r.artifacts.losses.front().data);
}

TEST_CASE("problem construction rejects bad inputs") {
  const auto data = small_dataset();
  auto spec = EstimationSpec::scaled_bounds(default_free_params(), ModelParams{});
  TrainConfig cfg;
  cfg.learning_rate = 0.0;
  CHECK_THROWS_AS(PinnProblem(data, spec, tiny(Activation::Tanh, 1), cfg), std::invalid_argument);
  ConcentrationSeries no_plasma = data;
  no_plasma.plasma.reset();
  CHECK_THROWS_AS(PinnProblem(no_plasma, spec, tiny(Activation::Tanh, 1), TrainConfig{}), std::invalid_argument);
}
