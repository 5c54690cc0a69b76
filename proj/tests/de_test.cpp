#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "pbpk/de.hpp"
#include "pbpk/ode.hpp"

using namespace pbpk;

namespace {

double sphere(const Eigen::VectorXd& x) { return x.squaredNorm(); }

Bounds box(std::size_t dim, double lo, double hi) {
  return Bounds{std::vector<double>(dim, lo), std::vector<double>(dim, hi)};
}

}  // namespace

TEST_CASE("config validation") {
  DEConfig c;
  CHECK_NOTHROW(c.validate(3));
  CHECK(c.population_for(6) == 60);
  c.population = 3;
  CHECK_THROWS_AS(c.validate(3), std::invalid_argument);
  c = DEConfig{};
  c.mutation = 0.0;
  CHECK_THROWS_AS(c.validate(3), std::invalid_argument);
  c = DEConfig{};
  c.crossover = 1.5;
  CHECK_THROWS_AS(c.validate(3), std::invalid_argument);
  CHECK_THROWS_AS(box(0, 0.0, 1.0).validate(), std::invalid_argument);
  CHECK_THROWS_AS(box(2, 1.0, 1.0).validate(), std::invalid_argument);
}

TEST_CASE("reflection stays inside the box") {
  CHECK(reflect_into(0.5, 0.0, 1.0) == 0.5);
  CHECK(reflect_into(-0.25, 0.0, 1.0) == 0.25);
  CHECK(reflect_into(1.25, 0.0, 1.0) == 0.75);
  CHECK(reflect_into(2.5, 0.0, 1.0) == doctest::Approx(0.5));
  for (double x = -10.0; x <= 10.0; x += 0.37) {
    const double y = reflect_into(x, -1.0, 2.0);
    CHECK(y >= -1.0);
    CHECK(y <= 2.0);
  }
}

TEST_CASE("sphere in six dimensions") {
  DEConfig c;
  c.population = 40;
  c.mutation = 0.7;
  c.crossover = 0.9;
  c.generations = 300;
  c.seed = 5;
  const auto r = differential_evolution(sphere, box(6, -5.0, 5.0), c);
  CHECK(r.value < 1e-10);
}

TEST_CASE("one-dimensional quadratic") {
  DEConfig c;
  c.population = 10;
  c.generations = 200;
  const auto r = differential_evolution([](const Eigen::VectorXd& x) { return (x(0) - 2.0) * (x(0) - 2.0); },
                                        Bounds{{1.0}, {3.0}}, c);
  CHECK(std::abs(r.best(0) - 2.0) < 1e-8);
}

TEST_CASE("determinism, monotone best value and in-bounds candidates") {
  DEConfig c;
  c.population = 20;
  c.generations = 60;
  c.seed = 99;
  const Bounds b{{-1.0, 0.0, 10.0}, {1.0, 0.5, 20.0}};
  auto rastrigin = [](const Eigen::VectorXd& x) {
    double s = 10.0 * static_cast<double>(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) s += x(i) * x(i) - 10.0 * std::cos(2.0 * M_PI * x(i));
    return s;
  };
  long seen = 0;
  bool inside = true;
  const auto observer = [&](const Eigen::VectorXd& x) {
    ++seen;
    for (std::size_t j = 0; j < 3; ++j) {
      inside = inside && x(static_cast<Eigen::Index>(j)) >= b.lower[j] && x(static_cast<Eigen::Index>(j)) <= b.upper[j];
    }
  };
  const auto r1 = differential_evolution(rastrigin, b, c, observer);
  const auto r2 = differential_evolution(rastrigin, b, c);
  CHECK(inside);
  CHECK(seen == r1.evaluations);
  CHECK(r1.history == r2.history);
  CHECK(r1.best == r2.best);
  for (std::size_t g = 1; g < r1.history.size(); ++g) CHECK(r1.history[g] <= r1.history[g - 1]);
  CHECK(r1.value == rastrigin(r1.best));
}

TEST_CASE("parallel and serial population evaluation agree") {
  DEConfig c;
  c.population = 16;
  c.generations = 30;
  c.seed = 3;
  const auto serial = differential_evolution(sphere, box(4, -2.0, 2.0), c);
  c.parallel = true;
  const auto parallel = differential_evolution(sphere, box(4, -2.0, 2.0), c);
  CHECK(serial.history == parallel.history);
  CHECK(serial.best == parallel.best);
}

TEST_CASE("zero generations returns the best initial member") {
  DEConfig c;
  c.population = 12;
  c.generations = 0;
  Eigen::MatrixXd members(2, 12);
  int k = 0;
  const auto r = differential_evolution(
      sphere, box(2, -1.0, 1.0), c, [&](const Eigen::VectorXd& x) { members.col(k++) = x; });
  CHECK(r.generations == 0);
  CHECK(r.history.size() == 1);
  double best = 1e300;
  for (int i = 0; i < 12; ++i) best = std::min(best, members.col(i).squaredNorm());
  CHECK(r.value == best);
}

TEST_CASE("stagnation ends the search early") {
  DEConfig c;
  c.population = 8;
  c.generations = 500;
  c.stagnation_window = 5;
  const auto r = differential_evolution([](const Eigen::VectorXd&) { return 1.0; }, box(2, 0.0, 1.0), c);
  CHECK(r.generations == 5);
}

TEST_CASE("least-squares objective") {
  const ModelParams ref;
  const auto data = synthesize_dataset(ref.sys, ref.drug, PlasmaSpec{}, ModelVariant::PaperLiteral, 200, 48.0, 0.0, 1);
  const auto plasma = data.plasma_profile();
  const auto spec = EstimationSpec::scaled_bounds(default_free_params(), ref);
  const auto solver = default_de_solver(data);
  std::vector<double> truth;
  for (const auto& p : spec.free) truth.push_back(ref[p.id]);
  CHECK(sse_objective(truth, spec, data, plasma, ModelVariant::PaperLiteral, solver) < 1e-12);
  auto doubled = truth;
  doubled[0] *= 2.0;
  CHECK(sse_objective(doubled, spec, data, plasma, ModelVariant::PaperLiteral, solver) > 0.0);

  const auto flat = synthesize_dataset(ref.sys, ref.drug, PlasmaSpec::zero(), ModelVariant::PaperLiteral, 30, 48.0, 0.0, 1);
  CHECK(sse_objective(doubled, spec, flat, flat.plasma_profile(), ModelVariant::PaperLiteral,
                      default_de_solver(flat)) == 0.0);
}

TEST_CASE("single free volume is recovered") {
  const ModelParams ref;
  const auto data = synthesize_dataset(ref.sys, ref.drug, PlasmaSpec{}, ModelVariant::PaperLiteral, 200, 48.0, 0.0, 1);
  const auto spec = EstimationSpec::scaled_bounds({ParamId::Vscsf}, ref);
  DEConfig c;
  c.generations = 80;
  const auto fit = fit_de(data, spec, c, default_de_solver(data), ModelVariant::PaperLiteral, &ref);
  REQUIRE(fit.estimate.abs_errors.size() == 1);
  CHECK(fit.estimate.abs_errors[0] < 1e-8);
}

TEST_CASE("estimation CSV round-trip") {
  EstimationResult r;
  r.method = "DE";
  r.names = {"Vbb", "fubb"};
  r.values = {0.064952435, 1.0 / 3.0};
  r.abs_errors = {1e-9, 2e-7};
  r.objective = 1.5e-17;
  r.seconds = 12.25;
  const auto path = std::filesystem::temp_directory_path() / "pbpk_estimation_test.csv";
  write_estimation(r, path);
  const auto back = read_estimation(path);
  CHECK(back.method == r.method);
  CHECK(back.names == r.names);
  CHECK(back.values == r.values);
  CHECK(back.abs_errors == r.abs_errors);
  CHECK(back.objective == r.objective);
  CHECK(back.seconds == r.seconds);
  r.abs_errors.clear();
  const auto plain = parse_estimation(format_estimation(r));
  CHECK(plain.abs_errors.empty());
  CHECK(plain.values == r.values);
}
