#include "pbpk/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <iostream>
#include <set>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "pbpk/dataio.hpp"
#include "pbpk/metrics.hpp"
#include "pbpk/ode.hpp"
#include "pbpk/parallel.hpp"

namespace pbpk::cli {

namespace {

std::vector<std::string> nonempty_items(const std::string& text) {
  std::vector<std::string> out;
  for (auto& item : split(text, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double to_number(const std::string& cell, const std::string& flag) {
  try {
    return parse_double(cell);
  } catch (const DataError&) {
    throw UsageError(flag + ": '" + cell + "' is not a number");
  }
}

void require_out(const std::filesystem::path& out) {
  if (out.empty()) throw UsageError("--out is required");
}

void require_file(const std::filesystem::path& p, const std::string& flag) {
  if (p.empty()) throw UsageError(flag + " is required");
}

void check(const EstimationOptions& o) {
  require_file(o.data, "--data");
  require_out(o.out);
  const auto free = parse_free_list(o.free);
  if (free.empty()) throw UsageError("--free: nothing to estimate");
  const auto [lo, hi] = parse_bounds_scale(o.bounds_scale);
  parse_variant(o.variant);
  try {
    EstimationSpec::scaled_bounds(free, ModelParams{}, lo, hi);
  } catch (const std::invalid_argument& e) {
    throw UsageError(std::string("--free: ") + e.what());
  }
}

void log_line(const std::string& line) { std::cerr << line << '\n'; }

}  // namespace

// ---------------------------------------------------------------------------
// Flag parsing

std::vector<ParamId> parse_free_list(const std::string& text) {
  std::vector<ParamId> ids;
  std::set<ParamId> seen;
  for (const auto& name : nonempty_items(text)) {
    const auto id = param_from_name(name);
    if (!id) throw UsageError("--free: unknown parameter '" + name + "'");
    if (!seen.insert(*id).second) throw UsageError("--free: parameter '" + name + "' listed twice");
    ids.push_back(*id);
  }
  return ids;
}

std::pair<double, double> parse_bounds_scale(const std::string& text) {
  const auto items = nonempty_items(text);
  if (items.size() != 2) throw UsageError("--bounds-scale expects two numbers 'lo,hi'");
  const double lo = to_number(items[0], "--bounds-scale");
  const double hi = to_number(items[1], "--bounds-scale");
  if (!(lo > 0.0) || !(hi > lo) || !std::isfinite(hi)) throw UsageError("--bounds-scale needs 0 < lo < hi");
  return {lo, hi};
}

std::array<double, kCompartments> parse_weight_vector(const std::string& text) {
  const auto items = nonempty_items(text);
  std::array<double, kCompartments> w{};
  if (items.size() == 1) {
    w.fill(to_number(items[0], "weights"));
  } else if (items.size() == kCompartments) {
    for (std::size_t k = 0; k < kCompartments; ++k) w[k] = to_number(items[k], "weights");
  } else {
    throw UsageError("loss weights take one value or four comma-separated values");
  }
  for (double v : w) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw UsageError("loss weights must be finite and non-negative");
  }
  return w;
}

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  for (const auto& item : nonempty_items(text)) {
    const double v = to_number(item, "list");
    if (v != std::floor(v) || v < 1 || v > 1e6) throw UsageError("'" + item + "' is not a positive integer");
    out.push_back(static_cast<int>(v));
  }
  if (out.empty()) throw UsageError("integer list is empty");
  return out;
}

std::vector<Activation> parse_activation_list(const std::string& text) {
  std::vector<Activation> out;
  for (const auto& item : nonempty_items(text)) {
    const auto a = activation_from_name(item);
    if (!a) throw UsageError("unknown activation '" + item + "'");
    out.push_back(*a);
  }
  if (out.empty()) throw UsageError("activation list is empty");
  return out;
}

ModelVariant parse_variant(const std::string& text) {
  const auto v = variant_from_name(text);
  if (!v) throw UsageError("--variant must be paper-literal or mass-consistent");
  return *v;
}

int resolve_jobs(std::optional<int> flag) {
  if (flag) {
    if (*flag < 1) throw UsageError("--jobs must be at least 1");
    return *flag;
  }
  if (const char* env = std::getenv("PBPK_IPINN_JOBS"); env && *env) {
    const int n = std::atoi(env);
    if (n < 1) throw UsageError("PBPK_IPINN_JOBS must be a positive integer");
    return n;
  }
  return 1;
}

// ---------------------------------------------------------------------------
// Validation

void check(const SimulateOptions& o) {
  require_out(o.out);
  if (o.points < 2) throw UsageError("--points must be at least 2");
  if (!(o.horizon > 0.0) || !std::isfinite(o.horizon)) throw UsageError("--horizon must be positive");
  if (!(o.noise_sd >= 0.0) || !std::isfinite(o.noise_sd)) throw UsageError("--noise-sd must be non-negative");
  parse_variant(o.variant);
}

void check(const TrainOptions& o) {
  check(o.est);
  if (o.layers < 1) throw UsageError("--layers must be at least 1");
  if (o.neurons < 1) throw UsageError("--neurons must be at least 1");
  if (!activation_from_name(o.activation)) throw UsageError("unknown --activation '" + o.activation + "'");
  if (!initializer_from_name(o.init)) throw UsageError("unknown --init '" + o.init + "'");
  if (!(o.omega > 0.0)) throw UsageError("--omega must be positive");
  if (!(o.lr > 0.0) || !std::isfinite(o.lr)) throw UsageError("--lr must be positive");
  if (o.iters < 0) throw UsageError("--iters must be non-negative");
  if (o.lbfgs_iters < 0) throw UsageError("--lbfgs-iters must be non-negative");
  if (o.log_stride < 1) throw UsageError("--log-stride must be at least 1");
  LossWeights w{parse_weight_vector(o.weights_ic), parse_weight_vector(o.weights_ode),
                parse_weight_vector(o.weights_data)};
  try {
    w.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

void check(const FitDeOptions& o) {
  check(o.est);
  if (o.population != 0 && o.population < 4) throw UsageError("--population must be at least 4");
  if (!(o.mutation > 0.0 && o.mutation <= 2.0)) throw UsageError("--mutation must lie in (0, 2]");
  if (!(o.crossover >= 0.0 && o.crossover <= 1.0)) throw UsageError("--crossover must lie in [0, 1]");
  if (o.generations < 0) throw UsageError("--generations must be non-negative");
  if (o.jobs < 1) throw UsageError("--jobs must be at least 1");
}

void check(const SweepOptions& o) {
  check(o.est);
  parse_activation_list(o.activations);
  parse_int_list(o.layers);
  parse_int_list(o.neurons);
  if (o.iters < 0) throw UsageError("--iters must be non-negative");
  if (!(o.lr > 0.0)) throw UsageError("--lr must be positive");
  if (!initializer_from_name(o.init)) throw UsageError("unknown --init '" + o.init + "'");
  if (o.jobs < 1) throw UsageError("--jobs must be at least 1");
}

void check(const MetricsOptions& o) {
  require_file(o.data, "--data");
  require_out(o.out);
  if (!(o.tail_fraction > 0.0 && o.tail_fraction <= 1.0)) throw UsageError("--tail-fraction must lie in (0, 1]");
}

void check(const CompareOptions& o) {
  require_out(o.out);
  if (o.results.size() < 2) throw UsageError("compare needs at least two --results files");
  parse_variant(o.variant);
}

// ---------------------------------------------------------------------------
// Shared setup

EstimationSetup load_estimation(const EstimationOptions& o) {
  EstimationSetup s;
  s.variant = parse_variant(o.variant);
  s.dataset = read_series(o.data);
  validate(s.dataset);
  if (!s.dataset.plasma) throw std::invalid_argument("data file must include a Cplasma column");
  const auto [lo, hi] = parse_bounds_scale(o.bounds_scale);
  s.spec = EstimationSpec::scaled_bounds(parse_free_list(o.free), ModelParams{}, lo, hi);
  return s;
}

NetworkConfig make_network_config(const TrainOptions& o) {
  NetworkConfig c;
  c.hidden_layers = o.layers;
  c.neurons = o.neurons;
  c.activation = *activation_from_name(o.activation);
  c.initializer = *initializer_from_name(o.init);
  c.omega = o.omega;
  c.seed = o.est.seed;
  return c;
}

TrainConfig make_train_config(const TrainOptions& o) {
  TrainConfig c;
  c.learning_rate = o.lr;
  c.iterations = o.iters;
  c.lbfgs_iterations = o.lbfgs_iters;
  c.extra_collocation = o.extra_collocation;
  c.weights = LossWeights{parse_weight_vector(o.weights_ic), parse_weight_vector(o.weights_ode),
                          parse_weight_vector(o.weights_data)};
  c.log_stride = o.log_stride;
  c.variant = parse_variant(o.est.variant);
  c.scale_outputs = o.scale_outputs;
  return c;
}

namespace {

EstimationResult summary_of(const std::string& method, const EstimationSpec& spec, double objective,
                            double seconds) {
  EstimationResult r;
  r.method = method;
  r.names = spec.names();
  r.values = spec.values();
  const ModelParams reference;
  for (std::size_t i = 0; i < spec.free.size(); ++i) {
    r.abs_errors.push_back(std::abs(r.values[i] - reference[spec.free[i].id]));
  }
  r.objective = objective;
  r.seconds = seconds;
  return r;
}

nlohmann::ordered_json params_json(const ModelParams& p) {
  nlohmann::ordered_json j;
  for (const auto& info : param_table()) j[std::string(info.name)] = p[info.id];
  return j;
}

void write_json(const std::filesystem::path& path, const nlohmann::ordered_json& j) {
  write_text(path, j.dump(2) + "\n");
}

}  // namespace

// ---------------------------------------------------------------------------
// Commands

void cmd_simulate(const SimulateOptions& o) {
  check(o);
  const ModelVariant variant = parse_variant(o.variant);
  const ModelParams params;
  const PlasmaSpec plasma;
  const ConcentrationSeries data =
      synthesize_dataset(params.sys, params.drug, plasma, variant, o.points, o.horizon, o.noise_sd, o.seed);
  write_series(data, o.out / "dataset.csv");

  nlohmann::ordered_json manifest;
  manifest["points"] = o.points;
  manifest["horizon_h"] = o.horizon;
  manifest["noise_sd"] = o.noise_sd;
  manifest["seed"] = o.seed;
  manifest["variant"] = std::string(variant_name(variant));
  manifest["solver"] = "expm";
  manifest["plasma"] = {{"ka", plasma.ka}, {"ke", plasma.ke}, {"peak", plasma.peak}};
  manifest["parameters"] = params_json(params);
  write_json(o.out / "manifest.json", manifest);
}

TrainResult cmd_train(const TrainOptions& o) {
  check(o);
  const EstimationSetup setup = load_estimation(o.est);
  TrainConfig cfg = make_train_config(o);
  if (!o.quiet) {
    cfg.on_log = [](const LossRecord& r) {
      log_line(fmt::format("iter {:>8}  total {:.6e}  data {:.6e}  ode {:.6e}  ic {:.6e}", r.iteration, r.total,
                           r.data, r.ode, r.ic));
    };
  }
  const TrainResult result = train(setup.dataset, setup.spec, make_network_config(o), cfg);
  const auto& out = o.est.out;

  write_loss_history(result.artifacts.losses, out / "loss_history.csv");
  write_param_trajectory(result.artifacts.param_names, result.artifacts.params, out / "param_trajectory.csv");
  write_series(result.artifacts.prediction, out / "prediction.csv");
  save_network(result.network, out / "network.txt");

  nlohmann::ordered_json sidecar;
  sidecar["iteration"] = result.best_iteration;
  sidecar["adam_iterations"] = o.iters;
  sidecar["lbfgs_steps"] = result.lbfgs_steps;
  sidecar["variant"] = o.est.variant;
  sidecar["output_scale"] = make_train_config(o).scale_outputs;
  nlohmann::ordered_json free = nlohmann::ordered_json::array();
  for (const auto& p : result.spec.free) {
    free.push_back({{"name", std::string(p.name())}, {"min", p.min}, {"max", p.max}, {"raw", p.raw},
                    {"value", constrain(p)}});
  }
  sidecar["free"] = free;
  if (result.failure) {
    sidecar["failure"] = {{"kind", result.failure->kind == TrainFailure::Kind::Diverged ? "diverged"
                                                                                       : "non-finite-gradient"},
                          {"iteration", result.failure->iteration},
                          {"message", result.failure->message}};
  }
  write_json(out / "checkpoint.json", sidecar);

  write_estimation(summary_of("PINN", result.spec, result.best_loss.total, result.artifacts.seconds),
                   out / "summary.csv");

  std::vector<LabeledSeries> overlay{{"data", setup.dataset}, {"PINN", result.artifacts.prediction}};
  for (std::size_t k = 0; k < kCompartments; ++k) {
    emit_plot(overlay, k, out / fmt::format("fit_{}.svg", kCompartmentNames[k]));
  }

  if (!o.quiet) {
    const ModelParams reference;
    for (const auto& p : result.spec.free) {
      const double ref = reference[p.id];
      log_line(fmt::format("{:>10}  {:.10g}  (reference {:.10g}, relative error {:.3e})", p.name(), constrain(p),
                           ref, std::abs(constrain(p) - ref) / ref));
    }
  }
  if (result.failure) {
    throw std::runtime_error(fmt::format("training stopped at iteration {}: {}", result.failure->iteration,
                                         result.failure->message));
  }
  return result;
}

DEFit cmd_fit_de(const FitDeOptions& o) {
  check(o);
  const EstimationSetup setup = load_estimation(o.est);
  DEConfig cfg;
  cfg.population = o.population;
  cfg.mutation = o.mutation;
  cfg.crossover = o.crossover;
  cfg.generations = o.generations;
  cfg.seed = o.est.seed;
  cfg.parallel = o.jobs > 1;
  if (cfg.parallel) set_parallel_threads(o.jobs);
  const ModelParams reference;
  DEFit fit = fit_de(setup.dataset, setup.spec, cfg, default_de_solver(setup.dataset), setup.variant, &reference);

  write_estimation(fit.estimate, o.est.out / "summary.csv");
  std::string history = "generation,best_objective\n";
  for (std::size_t g = 0; g < fit.search.history.size(); ++g) {
    history += fmt::format("{},{}\n", g, format_number(fit.search.history[g]));
  }
  write_text(o.est.out / "de_history.csv", history);
  return fit;
}

void cmd_sweep(const SweepOptions& o) {
  check(o);
  const EstimationSetup setup = load_estimation(o.est);
  const auto activations = parse_activation_list(o.activations);
  const auto layers = parse_int_list(o.layers);
  const auto neurons = parse_int_list(o.neurons);
  const long iters = o.fast ? 1000 : o.iters;

  struct Cell {
    Activation activation;
    int layers;
    int neurons;
    std::optional<double> loss;
    double seconds = 0.0;
  };
  std::vector<Cell> cells;
  for (Activation a : activations) {
    for (int l : layers) {
      for (int n : neurons) cells.push_back(Cell{a, l, n, std::nullopt, 0.0});
    }
  }

  auto run_cell = [&](Cell& cell) {
    NetworkConfig nc;
    nc.hidden_layers = cell.layers;
    nc.neurons = cell.neurons;
    nc.activation = cell.activation;
    nc.initializer = *initializer_from_name(o.init);
    nc.seed = o.est.seed;
    TrainConfig tc;
    tc.learning_rate = o.lr;
    tc.iterations = iters;
    tc.log_stride = std::max<long>(1, iters);
    tc.variant = setup.variant;
    tc.prediction_points = 2;
    const auto start = std::chrono::steady_clock::now();
    try {
      const TrainResult r = train(setup.dataset, setup.spec, nc, tc);
      if (!r.failure && !r.artifacts.losses.empty()) cell.loss = r.artifacts.losses.back().total;
    } catch (const std::exception&) {
      cell.loss.reset();
    }
    cell.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  };

  const long n_cells = static_cast<long>(cells.size());
  if (o.jobs > 1) {
#pragma omp parallel for schedule(dynamic) num_threads(o.jobs)
    for (long i = 0; i < n_cells; ++i) run_cell(cells[static_cast<std::size_t>(i)]);
  } else {
    for (long i = 0; i < n_cells; ++i) {
      auto& cell = cells[static_cast<std::size_t>(i)];
      run_cell(cell);
      log_line(fmt::format("{} L={} N={}: {}", activation_name(cell.activation), cell.layers, cell.neurons,
                           cell.loss ? fmt::format("{:.6e}", *cell.loss) : std::string("diverged")));
    }
  }

  std::string header = "activation,layers";
  for (int n : neurons) header += fmt::format(",N={}", n);
  std::string loss_table = header + "\n";
  std::string time_table = header + "\n";
  std::size_t i = 0;
  for (Activation a : activations) {
    for (int l : layers) {
      std::string loss_row = fmt::format("{},{}", activation_name(a), l);
      std::string time_row = loss_row;
      for (std::size_t j = 0; j < neurons.size(); ++j, ++i) {
        loss_row += "," + (cells[i].loss ? format_number(*cells[i].loss) : std::string("diverged"));
        time_row += "," + format_number(cells[i].seconds);
      }
      loss_table += loss_row + "\n";
      time_table += time_row + "\n";
    }
  }
  write_text(o.est.out / "sweep_loss.csv", loss_table);
  write_text(o.est.out / "sweep_time.csv", time_table);
}

void cmd_metrics(const MetricsOptions& o) {
  check(o);
  const ConcentrationSeries series = read_series(o.data);
  validate(series);
  write_pk_summary(summarize_all(series, o.tail_fraction), o.out / "pk_summary.csv");
}

void cmd_compare(const CompareOptions& o) {
  check(o);
  const ModelVariant variant = parse_variant(o.variant);
  std::vector<EstimationResult> results;
  for (const auto& path : o.results) results.push_back(read_estimation(path));

  std::vector<std::string> names;
  for (const auto& r : results) {
    for (const auto& n : r.names) {
      if (std::find(names.begin(), names.end(), n) == names.end()) names.push_back(n);
    }
  }
  const ModelParams reference;
  std::string table = "parameter,true_value";
  for (const auto& r : results) table += fmt::format(",{0},{0}_abs_error", r.method);
  table += "\n";
  for (const auto& n : names) {
    const auto id = param_from_name(n);
    if (!id) throw std::invalid_argument("unknown parameter '" + n + "' in results");
    const double truth = reference[*id];
    std::string row = n + "," + format_number(truth);
    for (const auto& r : results) {
      const auto it = std::find(r.names.begin(), r.names.end(), n);
      if (it == r.names.end()) {
        row += ",,";
        continue;
      }
      const double v = r.values[static_cast<std::size_t>(it - r.names.begin())];
      row += "," + format_number(v) + "," + format_number(std::abs(v - truth));
    }
    table += row + "\n";
  }
  write_text(o.out / "comparison.csv", table);

  if (!o.data.empty()) {
    const ConcentrationSeries data = read_series(o.data);
    validate(data);
    const PlasmaProfile plasma = data.plasma_profile();
    const auto grid = uniform_grid(data.times.front(), data.times.back(), 481);
    std::vector<LabeledSeries> overlay{{"data", data}};
    for (const auto& r : results) {
      ModelParams p = reference;
      for (std::size_t i = 0; i < r.names.size(); ++i) p[*param_from_name(r.names[i])] = r.values[i];
      const InitialState init{data.state(0), data.times.front()};
      overlay.push_back({r.method, solve(p.sys, p.drug, plasma, variant, init, SolveConfig::oracle(grid))});
    }
    for (std::size_t k = 0; k < kCompartments; ++k) {
      emit_plot(overlay, k, o.out / fmt::format("overlay_{}.svg", kCompartmentNames[k]));
    }
  }
}

// ---------------------------------------------------------------------------

namespace {

void add_estimation_flags(CLI::App* app, EstimationOptions& e) {
  app->add_option("--data", e.data, "Dataset CSV (Time,Cbb,Cbm,Cccsf,Cscsf,Cplasma)")->required();
  app->add_option("--free", e.free, "Comma-separated free parameters")->capture_default_str();
  app->add_option("--bounds-scale", e.bounds_scale, "Bounds as multiples of the reference value")
      ->capture_default_str();
  app->add_option("--variant", e.variant, "paper-literal or mass-consistent")->capture_default_str();
  app->add_option("--seed", e.seed, "Random seed")->capture_default_str();
  app->add_option("--out", e.out, "Output directory")->required();
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"Brain PBPK parameter estimation with an inverse physics-informed neural network"};
  app.require_subcommand(1);

  SimulateOptions sim;
  auto* simulate = app.add_subcommand("simulate", "Synthesize a reference dataset");
  simulate->add_option("--points", sim.points, "Number of time points")->capture_default_str();
  simulate->add_option("--horizon", sim.horizon, "Final time (h)")->capture_default_str();
  simulate->add_option("--noise-sd", sim.noise_sd, "Gaussian noise standard deviation (mg/L)")->capture_default_str();
  simulate->add_option("--seed", sim.seed, "Noise seed")->capture_default_str();
  simulate->add_option("--variant", sim.variant, "paper-literal or mass-consistent")->capture_default_str();
  simulate->add_option("--out", sim.out, "Output directory")->required();

  TrainOptions tr;
  auto* train_cmd = app.add_subcommand("train", "Train the inverse PINN");
  add_estimation_flags(train_cmd, tr.est);
  train_cmd->add_option("--layers", tr.layers, "Hidden layers")->capture_default_str();
  train_cmd->add_option("--neurons", tr.neurons, "Neurons per hidden layer")->capture_default_str();
  train_cmd->add_option("--activation", tr.activation, "tanh, sigmoid, relu or sin")->capture_default_str();
  train_cmd->add_option("--init", tr.init, "glorot-normal or glorot-uniform")->capture_default_str();
  train_cmd->add_option("--omega", tr.omega, "Frequency of the sin activation")->capture_default_str();
  train_cmd->add_option("--lr", tr.lr, "Adam learning rate")->capture_default_str();
  train_cmd->add_option("--iters", tr.iters, "Adam iterations")->capture_default_str();
  train_cmd->add_option("--lbfgs-iters", tr.lbfgs_iters, "L-BFGS refinement steps")->capture_default_str();
  train_cmd->add_option("--weights-ic", tr.weights_ic, "IC loss weights (one or four values)")
      ->capture_default_str();
  train_cmd->add_option("--weights-ode", tr.weights_ode, "ODE loss weights")->capture_default_str();
  train_cmd->add_option("--weights-data", tr.weights_data, "Data loss weights")->capture_default_str();
  train_cmd->add_option("--collocation-extra", tr.extra_collocation, "Uniform collocation points added")
      ->capture_default_str();
  train_cmd->add_flag("--scale-outputs", tr.scale_outputs, "Scale network outputs by the data maxima");
  train_cmd->add_option("--log-stride", tr.log_stride, "Iterations between log entries")->capture_default_str();
  train_cmd->add_flag("--quiet", tr.quiet, "Suppress progress lines");

  FitDeOptions de;
  std::optional<int> de_jobs;
  auto* fit_cmd = app.add_subcommand("fit-de", "Differential evolution baseline fit");
  add_estimation_flags(fit_cmd, de.est);
  fit_cmd->add_option("--population", de.population, "Population size (0 = 10 x dimension)")->capture_default_str();
  fit_cmd->add_option("--mutation", de.mutation, "Mutation factor F")->capture_default_str();
  fit_cmd->add_option("--crossover", de.crossover, "Crossover rate CR")->capture_default_str();
  fit_cmd->add_option("--generations", de.generations, "Generation budget")->capture_default_str();
  fit_cmd->add_option("--jobs", de_jobs, "Worker threads");

  SweepOptions sw;
  std::optional<int> sw_jobs;
  auto* sweep = app.add_subcommand("sweep", "Activation, depth and width sweep");
  add_estimation_flags(sweep, sw.est);
  sweep->add_option("--activations", sw.activations, "Activations to try")->capture_default_str();
  sweep->add_option("--layers", sw.layers, "Hidden layer counts")->capture_default_str();
  sweep->add_option("--neurons", sw.neurons, "Neuron counts")->capture_default_str();
  sweep->add_option("--iters", sw.iters, "Adam iterations per cell")->capture_default_str();
  sweep->add_flag("--fast", sw.fast, "Use 1000 iterations per cell");
  sweep->add_option("--lr", sw.lr, "Adam learning rate")->capture_default_str();
  sweep->add_option("--init", sw.init, "glorot-normal or glorot-uniform")->capture_default_str();
  sweep->add_option("--jobs", sw_jobs, "Worker threads");

  MetricsOptions me;
  auto* metrics = app.add_subcommand("metrics", "AUC, Cmax, Tmax and half-life per compartment");
  metrics->add_option("--data", me.data, "Series CSV")->required();
  metrics->add_option("--tail-fraction", me.tail_fraction, "Fraction of points used for the half-life fit")
      ->capture_default_str();
  metrics->add_option("--out", me.out, "Output directory")->required();

  CompareOptions cmp;
  auto* compare = app.add_subcommand("compare", "Side-by-side table of estimation results");
  compare->add_option("--results", cmp.results, "Estimation summary CSV files")->required()->delimiter(',');
  compare->add_option("--data", cmp.data, "Dataset CSV for overlay plots");
  compare->add_option("--variant", cmp.variant, "paper-literal or mass-consistent")->capture_default_str();
  compare->add_option("--out", cmp.out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*simulate) {
      cmd_simulate(sim);
    } else if (*train_cmd) {
      cmd_train(tr);
    } else if (*fit_cmd) {
      de.jobs = resolve_jobs(de_jobs);
      cmd_fit_de(de);
    } else if (*sweep) {
      sw.jobs = resolve_jobs(sw_jobs);
      cmd_sweep(sw);
    } else if (*metrics) {
      cmd_metrics(me);
    } else if (*compare) {
      cmd_compare(cmp);
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace pbpk::cli
