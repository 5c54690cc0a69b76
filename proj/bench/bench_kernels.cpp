#include <benchmark/benchmark.h>

#include <Eigen/Dense>

#include "pbpk/de.hpp"
#include "pbpk/ode.hpp"
#include "pbpk/parallel.hpp"

using namespace pbpk;

namespace {

Network bench_network() {
  NetworkConfig cfg;
  cfg.seed = 1;
  return init_network(cfg);
}

Eigen::RowVectorXd bench_times(Eigen::Index n) { return Eigen::RowVectorXd::LinSpaced(n, 0.0, 1.0); }

struct SseFixture {
  ModelParams ref;
  ConcentrationSeries data;
  EstimationSpec spec;
  PlasmaProfile plasma;
  SolveConfig solver;
  Eigen::MatrixXd population;

  SseFixture() {
    data = synthesize_dataset(ref.sys, ref.drug, PlasmaSpec{}, ModelVariant::PaperLiteral, 200, 48.0, 0.0, 1);
    spec = EstimationSpec::scaled_bounds(default_free_params(), ref);
    plasma = data.plasma_profile();
    solver = default_de_solver(data);
    population.resize(static_cast<Eigen::Index>(spec.free.size()), 24);
    for (Eigen::Index j = 0; j < population.cols(); ++j) {
      for (Eigen::Index i = 0; i < population.rows(); ++i) {
        const auto& f = spec.free[static_cast<std::size_t>(i)];
        const double u = static_cast<double>((j * 7 + i * 3) % 11) / 10.0;
        population(i, j) = f.min + u * (f.max - f.min);
      }
    }
  }

  ScalarObjective objective() const {
    return [this](const Eigen::VectorXd& x) {
      return sse_objective(std::vector<double>(x.data(), x.data() + x.size()), spec, data, plasma,
                           ModelVariant::PaperLiteral, solver);
    };
  }
};

void BM_PredictSerial(benchmark::State& state) {
  const Network net = bench_network();
  const auto t = bench_times(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(predict_points_serial(net, t));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_PredictParallel(benchmark::State& state) {
  const Network net = bench_network();
  const auto t = bench_times(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(predict_points_parallel(net, t));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_PopulationSerial(benchmark::State& state) {
  const SseFixture fx;
  const auto f = fx.objective();
  for (auto _ : state) benchmark::DoNotOptimize(evaluate_population(f, fx.population, false));
  state.SetItemsProcessed(state.iterations() * fx.population.cols());
}

void BM_PopulationParallel(benchmark::State& state) {
  const SseFixture fx;
  const auto f = fx.objective();
  for (auto _ : state) benchmark::DoNotOptimize(evaluate_population(f, fx.population, true));
  state.SetItemsProcessed(state.iterations() * fx.population.cols());
}

}  // namespace

BENCHMARK(BM_PredictSerial)->Arg(481)->Arg(4096);
BENCHMARK(BM_PredictParallel)->Arg(481)->Arg(4096);
BENCHMARK(BM_PopulationSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PopulationParallel)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
