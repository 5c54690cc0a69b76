#pragma once

// Subcommands of the pbpk-ipinn command-line tool. Each options struct is
// validated in full before any computation starts.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pbpk/de.hpp"
#include "pbpk/ipinn.hpp"
#include "pbpk/model.hpp"
#include "pbpk/network.hpp"

namespace pbpk::cli {

/// Bad flag values; reported with exit code 2.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct SimulateOptions {
  std::size_t points = 200;
  double horizon = 48.0;
  double noise_sd = 0.0;
  std::uint64_t seed = 1;
  std::string variant = "paper-literal";
  std::filesystem::path out;
};

struct EstimationOptions {
  std::filesystem::path data;
  std::string free = "Vbb,Vbm,Vccsf,Vscsf,fubb,lam_ccsf";
  std::string bounds_scale = "0.5,2.0";
  std::string variant = "paper-literal";
  std::uint64_t seed = 1;
  std::filesystem::path out;
};

struct TrainOptions {
  EstimationOptions est;
  int layers = 6;
  int neurons = 50;
  std::string activation = "tanh";
  std::string init = "glorot-normal";
  double omega = 1.0;
  double lr = 1e-4;
  long iters = 10000;
  long lbfgs_iters = 500;
  std::string weights_ic = "1";
  std::string weights_ode = "2";
  std::string weights_data = "3";
  std::size_t extra_collocation = 0;
  bool scale_outputs = false;
  long log_stride = 100;
  bool quiet = false;
};

struct FitDeOptions {
  EstimationOptions est;
  int population = 0;
  double mutation = 0.8;
  double crossover = 0.9;
  int generations = 500;
  int jobs = 1;
};

struct SweepOptions {
  EstimationOptions est;
  std::string activations = "relu,tanh,sigmoid,sin";
  std::string layers = "1,2,6";
  std::string neurons = "9,18,27,50";
  long iters = 10000;
  bool fast = false;
  double lr = 1e-4;
  std::string init = "glorot-normal";
  int jobs = 1;
};

struct MetricsOptions {
  std::filesystem::path data;
  double tail_fraction = 0.25;
  std::filesystem::path out;
};

struct CompareOptions {
  std::vector<std::filesystem::path> results;
  std::filesystem::path data;
  std::string variant = "paper-literal";
  std::filesystem::path out;
};

/// Parsed and checked form of the shared estimation flags.
struct EstimationSetup {
  ConcentrationSeries dataset;
  EstimationSpec spec;
  ModelVariant variant = ModelVariant::PaperLiteral;
};

std::vector<ParamId> parse_free_list(const std::string& text);
std::pair<double, double> parse_bounds_scale(const std::string& text);
/// One value broadcast to all compartments, or four comma-separated values.
std::array<double, kCompartments> parse_weight_vector(const std::string& text);
std::vector<int> parse_int_list(const std::string& text);
std::vector<Activation> parse_activation_list(const std::string& text);
ModelVariant parse_variant(const std::string& text);
/// --jobs when given, else PBPK_IPINN_JOBS, else 1.
int resolve_jobs(std::optional<int> flag);

/// Flag checks. Each throws UsageError before touching any input file.
void check(const SimulateOptions& o);
void check(const TrainOptions& o);
void check(const FitDeOptions& o);
void check(const SweepOptions& o);
void check(const MetricsOptions& o);
void check(const CompareOptions& o);

EstimationSetup load_estimation(const EstimationOptions& o);
TrainConfig make_train_config(const TrainOptions& o);
NetworkConfig make_network_config(const TrainOptions& o);

void cmd_simulate(const SimulateOptions& o);
TrainResult cmd_train(const TrainOptions& o);
DEFit cmd_fit_de(const FitDeOptions& o);
void cmd_sweep(const SweepOptions& o);
void cmd_metrics(const MetricsOptions& o);
void cmd_compare(const CompareOptions& o);

/// Full command-line entry point; returns the process exit code.
int run(int argc, char** argv);

}  // namespace pbpk::cli
