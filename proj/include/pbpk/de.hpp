#pragma once

// Differential evolution (rand/1/bin) and the least-squares baseline fit that
// recovers free model parameters by repeated forward solves.

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "pbpk/ipinn.hpp"
#include "pbpk/model.hpp"
#include "pbpk/ode.hpp"
#include "pbpk/series.hpp"

namespace pbpk {

struct DEConfig {
  int population = 0;          // 0 selects 10 x dimension
  double mutation = 0.8;       // F
  double crossover = 0.9;      // CR
  int generations = 500;
  double stagnation_tolerance = 1e-12;  // relative improvement of the best value
  int stagnation_window = 50;
  std::uint64_t seed = 1;
  bool parallel = false;       // evaluate each generation with OpenMP

  /// Throws std::invalid_argument unless NP >= 4, F in (0, 2], CR in [0, 1].
  void validate(std::size_t dimension) const;
  int population_for(std::size_t dimension) const;
};

struct Bounds {
  std::vector<double> lower;
  std::vector<double> upper;

  std::size_t dimension() const { return lower.size(); }
  void validate() const;
};

using ScalarObjective = std::function<double(const Eigen::VectorXd&)>;

struct DEResult {
  Eigen::VectorXd best;
  double value = 0.0;
  int generations = 0;             // completed generations after initialization
  std::vector<double> history;     // best value after initialization and after each generation
  long evaluations = 0;
};

/// Observer called with every candidate before it is evaluated.
using CandidateObserver = std::function<void(const Eigen::VectorXd&)>;

/// Values of every member of `population` (columns). The parallel and serial
/// variants return identical results.
std::vector<double> evaluate_population(const ScalarObjective& f, const Eigen::MatrixXd& population, bool parallel);

/// Maps a coordinate that left [lo, hi] back inside by reflection.
double reflect_into(double x, double lo, double hi);

DEResult differential_evolution(const ScalarObjective& f, const Bounds& bounds, const DEConfig& cfg,
                                const CandidateObserver& observer = {});

/// Sum of squared residuals over all compartments and data times for the
/// candidate free values. Solver failures give +infinity.
double sse_objective(const std::vector<double>& free_values, const EstimationSpec& spec,
                     const ConcentrationSeries& dataset, const PlasmaProfile& plasma, ModelVariant variant,
                     const SolveConfig& solver);

/// DOPRI45 at tolerance 1e-9 on the dataset's time grid.
SolveConfig default_de_solver(const ConcentrationSeries& dataset);

struct EstimationResult {
  std::string method;
  std::vector<std::string> names;
  std::vector<double> values;
  std::vector<double> abs_errors;  // empty when no reference is known
  double objective = 0.0;
  double seconds = 0.0;
};

struct DEFit {
  EstimationResult estimate;
  DEResult search;
};

DEFit fit_de(const ConcentrationSeries& dataset, const EstimationSpec& spec, const DEConfig& cfg,
             const SolveConfig& solver, ModelVariant variant = ModelVariant::PaperLiteral,
             const ModelParams* reference = nullptr);

/// CSV with header "method,objective,seconds,<name>,<name>_abs_error,..." and one row.
std::string format_estimation(const EstimationResult& r);
void write_estimation(const EstimationResult& r, const std::filesystem::path& path);
EstimationResult parse_estimation(std::string_view text);
EstimationResult read_estimation(const std::filesystem::path& path);

}  // namespace pbpk
