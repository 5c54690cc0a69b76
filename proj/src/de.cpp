#include "pbpk/de.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "pbpk/dataio.hpp"

namespace pbpk {

void DEConfig::validate(std::size_t dimension) const {
  if (dimension == 0) throw std::invalid_argument("differential evolution needs at least one dimension");
  if (population_for(dimension) < 4) throw std::invalid_argument("population size must be at least 4");
  if (!(mutation > 0.0 && mutation <= 2.0)) throw std::invalid_argument("mutation factor F must lie in (0, 2]");
  if (!(crossover >= 0.0 && crossover <= 1.0)) throw std::invalid_argument("crossover rate CR must lie in [0, 1]");
  if (generations < 0) throw std::invalid_argument("generation budget must be non-negative");
  if (stagnation_window < 1) throw std::invalid_argument("stagnation window must be at least 1");
  if (!(stagnation_tolerance >= 0.0)) throw std::invalid_argument("stagnation tolerance must be non-negative");
}

int DEConfig::population_for(std::size_t dimension) const {
  return population > 0 ? population : static_cast<int>(10 * dimension);
}

void Bounds::validate() const {
  if (lower.size() != upper.size()) throw std::invalid_argument("bounds have mismatched lengths");
  if (lower.empty()) throw std::invalid_argument("bounds are empty");
  for (std::size_t i = 0; i < lower.size(); ++i) {
    if (!std::isfinite(lower[i]) || !std::isfinite(upper[i]) || !(lower[i] < upper[i])) {
      throw std::invalid_argument("bounds must be finite with lower < upper");
    }
  }
}

double reflect_into(double x, double lo, double hi) {
  if (x >= lo && x <= hi) return x;
  const double width = hi - lo;
  double y = std::fmod(x - lo, 2.0 * width);
  if (y < 0.0) y += 2.0 * width;
  if (y > width) y = 2.0 * width - y;
  return std::clamp(lo + y, lo, hi);
}

std::vector<double> evaluate_population(const ScalarObjective& f, const Eigen::MatrixXd& population, bool parallel) {
  const auto n = static_cast<long>(population.cols());
  std::vector<double> values(static_cast<std::size_t>(n));
  if (parallel) {
#pragma omp parallel for schedule(dynamic)
    for (long i = 0; i < n; ++i) values[static_cast<std::size_t>(i)] = f(population.col(i));
  } else {
    for (long i = 0; i < n; ++i) values[static_cast<std::size_t>(i)] = f(population.col(i));
  }
  for (auto& v : values) {
    if (std::isnan(v)) v = std::numeric_limits<double>::infinity();
  }
  return values;
}

DEResult differential_evolution(const ScalarObjective& f, const Bounds& bounds, const DEConfig& cfg,
                                const CandidateObserver& observer) {
  bounds.validate();
  const std::size_t dim = bounds.dimension();
  cfg.validate(dim);
  const int np = cfg.population_for(dim);
  const auto d = static_cast<Eigen::Index>(dim);

  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> pick_member(0, np - 1);
  std::uniform_int_distribution<Eigen::Index> pick_coord(0, d - 1);

  Eigen::MatrixXd pop(d, np);
  for (int i = 0; i < np; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) {
      const auto k = static_cast<std::size_t>(j);
      pop(j, i) = bounds.lower[k] + unit(rng) * (bounds.upper[k] - bounds.lower[k]);
    }
    if (observer) observer(pop.col(i));
  }
  std::vector<double> fit = evaluate_population(f, pop, cfg.parallel);

  DEResult result;
  result.evaluations = np;
  int best = 0;
  for (int i = 1; i < np; ++i) {
    if (fit[static_cast<std::size_t>(i)] < fit[static_cast<std::size_t>(best)]) best = i;
  }
  result.best = pop.col(best);
  result.value = fit[static_cast<std::size_t>(best)];
  result.history.push_back(result.value);

  Eigen::MatrixXd trials(d, np);
  for (int g = 0; g < cfg.generations; ++g) {
    for (int i = 0; i < np; ++i) {
      int a, b, c;
      do a = pick_member(rng); while (a == i);
      do b = pick_member(rng); while (b == i || b == a);
      do c = pick_member(rng); while (c == i || c == a || c == b);
      const Eigen::Index forced = pick_coord(rng);
      for (Eigen::Index j = 0; j < d; ++j) {
        const double r = unit(rng);
        if (j == forced || r < cfg.crossover) {
          const auto k = static_cast<std::size_t>(j);
          const double v = pop(j, a) + cfg.mutation * (pop(j, b) - pop(j, c));
          trials(j, i) = reflect_into(v, bounds.lower[k], bounds.upper[k]);
        } else {
          trials(j, i) = pop(j, i);
        }
      }
      if (observer) observer(trials.col(i));
    }
    const std::vector<double> trial_fit = evaluate_population(f, trials, cfg.parallel);
    result.evaluations += np;
    for (int i = 0; i < np; ++i) {
      const auto k = static_cast<std::size_t>(i);
      if (trial_fit[k] <= fit[k]) {
        pop.col(i) = trials.col(i);
        fit[k] = trial_fit[k];
        if (fit[k] < result.value) {
          result.value = fit[k];
          result.best = pop.col(i);
        }
      }
    }
    result.history.push_back(result.value);
    result.generations = g + 1;

    if (result.value == 0.0) break;
    if (result.generations >= cfg.stagnation_window) {
      const double old = result.history[result.history.size() - 1 - static_cast<std::size_t>(cfg.stagnation_window)];
      if (std::isfinite(old) && old - result.value <= cfg.stagnation_tolerance * std::abs(old)) break;
    }
  }
  return result;
}

double sse_objective(const std::vector<double>& free_values, const EstimationSpec& spec,
                     const ConcentrationSeries& dataset, const PlasmaProfile& plasma, ModelVariant variant,
                     const SolveConfig& solver) {
  if (free_values.size() != spec.free.size()) throw std::invalid_argument("sse_objective: wrong number of values");
  ModelParams p = spec.fixed;
  for (std::size_t i = 0; i < free_values.size(); ++i) p[spec.free[i].id] = free_values[i];
  try {
    const InitialState init{dataset.state(0), dataset.times.front()};
    const ConcentrationSeries sol = solve(p.sys, p.drug, plasma, variant, init, solver);
    if (sol.size() != dataset.size()) return std::numeric_limits<double>::infinity();
    double sse = 0.0;
    for (std::size_t k = 0; k < kCompartments; ++k) {
      for (std::size_t i = 0; i < dataset.size(); ++i) {
        const double r = sol.columns[k][i] - dataset.columns[k][i];
        sse += r * r;
      }
    }
    return std::isfinite(sse) ? sse : std::numeric_limits<double>::infinity();
  } catch (const SolverError&) {
    return std::numeric_limits<double>::infinity();
  } catch (const std::invalid_argument&) {
    return std::numeric_limits<double>::infinity();
  }
}

SolveConfig default_de_solver(const ConcentrationSeries& dataset) { return SolveConfig::dopri45(dataset.times, 1e-9); }

DEFit fit_de(const ConcentrationSeries& dataset, const EstimationSpec& spec, const DEConfig& cfg,
             const SolveConfig& solver, ModelVariant variant, const ModelParams* reference) {
  const auto started = std::chrono::steady_clock::now();
  validate(dataset);
  spec.validate();
  if (spec.free.empty()) throw std::invalid_argument("no free parameters to estimate");
  if (!dataset.plasma) throw std::invalid_argument("DE fit needs a Cplasma column");
  const PlasmaProfile plasma = dataset.plasma_profile();

  Bounds bounds;
  for (const auto& p : spec.free) {
    bounds.lower.push_back(p.min);
    bounds.upper.push_back(p.max);
  }
  const ScalarObjective objective = [&](const Eigen::VectorXd& x) {
    return sse_objective(std::vector<double>(x.data(), x.data() + x.size()), spec, dataset, plasma, variant, solver);
  };

  DEFit fit;
  fit.search = differential_evolution(objective, bounds, cfg);
  auto& est = fit.estimate;
  est.method = "DE";
  est.names = spec.names();
  est.values.assign(fit.search.best.data(), fit.search.best.data() + fit.search.best.size());
  if (reference) {
    for (std::size_t i = 0; i < spec.free.size(); ++i) {
      est.abs_errors.push_back(std::abs(est.values[i] - (*reference)[spec.free[i].id]));
    }
  }
  est.objective = fit.search.value;
  est.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return fit;
}

std::string format_estimation(const EstimationResult& r) {
  const bool with_errors = !r.abs_errors.empty();
  if (r.values.size() != r.names.size() || (with_errors && r.abs_errors.size() != r.names.size())) {
    throw std::invalid_argument("estimation result has inconsistent lengths");
  }
  std::string header = "method,objective,seconds";
  std::string row = r.method + "," + format_number(r.objective) + "," + format_number(r.seconds);
  for (std::size_t i = 0; i < r.names.size(); ++i) {
    header += "," + r.names[i];
    row += "," + format_number(r.values[i]);
    if (with_errors) {
      header += "," + r.names[i] + "_abs_error";
      row += "," + format_number(r.abs_errors[i]);
    }
  }
  return header + "\n" + row + "\n";
}

void write_estimation(const EstimationResult& r, const std::filesystem::path& path) {
  write_text(path, format_estimation(r));
}

EstimationResult parse_estimation(std::string_view text) {
  const std::size_t nl = text.find('\n');
  if (nl == std::string_view::npos) throw DataError(DataError::Kind::Format, "", "estimation CSV needs two lines");
  std::string_view second = text.substr(nl + 1);
  if (const auto e = second.find('\n'); e != std::string_view::npos) second = second.substr(0, e);
  const auto header = split(text.substr(0, nl), ',');
  const auto row = split(second, ',');
  if (header.size() < 3 || header[0] != "method" || header[1] != "objective" || header[2] != "seconds") {
    throw DataError(DataError::Kind::MissingColumn, "method", "estimation CSV header must start with method,objective,seconds");
  }
  if (row.size() != header.size()) throw DataError(DataError::Kind::Format, "", "estimation CSV row length mismatch");
  EstimationResult r;
  r.method = row[0];
  r.objective = parse_double(row[1]);
  r.seconds = parse_double(row[2]);
  const std::string suffix = "_abs_error";
  for (std::size_t i = 3; i < header.size(); ++i) {
    const std::string& h = header[i];
    if (h.size() > suffix.size() && h.compare(h.size() - suffix.size(), suffix.size(), suffix) == 0) {
      r.abs_errors.push_back(parse_double(row[i]));
    } else {
      r.names.push_back(h);
      r.values.push_back(parse_double(row[i]));
    }
  }
  if (!r.abs_errors.empty() && r.abs_errors.size() != r.names.size()) {
    throw DataError(DataError::Kind::Format, "", "estimation CSV has errors for only some parameters");
  }
  return r;
}

EstimationResult read_estimation(const std::filesystem::path& path) { return parse_estimation(read_text(path)); }

}  // namespace pbpk
