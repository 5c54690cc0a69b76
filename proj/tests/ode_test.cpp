#include <doctest.h>

#include <cmath>
#include <random>

#include <unsupported/Eigen/MatrixFunctions>

#include "pbpk/expm.hpp"
#include "pbpk/ode.hpp"

using namespace pbpk;

namespace {

double max_rel_error(const ConcentrationSeries& a, const ConcentrationSeries& b) {
  double worst = 0.0;
  for (std::size_t k = 0; k < kCompartments; ++k) {
    double diff = 0.0;
    double mag = 0.0;
    for (std::size_t i = 0; i < b.size(); ++i) {
      diff = std::max(diff, std::abs(a.columns[k][i] - b.columns[k][i]));
      mag = std::max(mag, std::abs(b.columns[k][i]));
    }
    if (mag > 0.0) worst = std::max(worst, diff / mag);
  }
  return worst;
}

struct DefaultProblem {
  ModelParams p;
  ConcentrationSeries data;
  PlasmaProfile plasma;
  DefaultProblem() {
    data = synthesize_dataset(p.sys, p.drug, PlasmaSpec{}, ModelVariant::PaperLiteral, 200, 48.0, 0.0, 1);
    plasma = data.plasma_profile();
  }
  ConcentrationSeries run(const SolveConfig& cfg) const {
    return solve(p.sys, p.drug, plasma, ModelVariant::PaperLiteral, InitialState{}, cfg);
  }
};

}  // namespace

TEST_CASE("expm agrees with Eigen's matrix exponential across norms") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 1.0);
  for (double scale : {1e-6, 1e-2, 0.3, 1.0, 4.0, 30.0, 200.0}) {
    for (int trial = 0; trial < 5; ++trial) {
      Eigen::MatrixXd m(6, 6);
      for (Eigen::Index i = 0; i < 6; ++i) {
        for (Eigen::Index j = 0; j < 6; ++j) m(i, j) = n(rng) * scale / 6.0;
      }
      // keep the spectrum in the left half plane so entries stay bounded
      m -= scale * Eigen::MatrixXd::Identity(6, 6);
      const Eigen::MatrixXd ours = expm(m);
      const Eigen::MatrixXd ref = m.exp();
      CHECK((ours - ref).norm() <= 1e-12 * std::max(1.0, ref.norm()));
    }
  }
}

TEST_CASE("expm special cases") {
  CHECK(expm(Eigen::MatrixXd::Zero(4, 4)).isIdentity(0.0));
  const Eigen::MatrixXd d = Eigen::Vector3d(-1.0, 0.5, 2.0).asDiagonal();
  const Eigen::MatrixXd e = expm(d);
  CHECK(e(0, 0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
  CHECK(e(2, 2) == doctest::Approx(std::exp(2.0)).epsilon(1e-14));
  Eigen::MatrixXd nil = Eigen::MatrixXd::Zero(3, 3);
  nil(0, 1) = 1.0;
  nil(1, 2) = 1.0;
  const Eigen::MatrixXd en = expm(nil);
  CHECK(en(0, 2) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(en(0, 1) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("expm propagation examples") {
  SystemMatrix a;
  a.a = -Eigen::Matrix4d::Identity();
  ModelParams p;
  const auto zero = PlasmaProfile::constant(0.0, 0.0, 1.0);
  const auto s = expm_propagate(a, {1, 0, 0, 0}, zero, p.sys, {0.0, 1.0});
  CHECK(s.columns[0][1] == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
  CHECK(s.columns[1][1] == 0.0);

  SystemMatrix z;
  p.sys.Vbb = 1.0;
  p.sys.Qbrain = 1.0;
  const auto g0 = PlasmaProfile::constant(0.75, 0.0, 2.0);
  const auto pure = expm_propagate(z, {1, 2, 3, 4}, g0, p.sys, {0.0, 2.0});
  CHECK(pure.columns[0][1] == doctest::Approx(1.0 + 2.0 * 0.75).epsilon(1e-15));
  CHECK(pure.columns[1][1] == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("expm propagation integrates a linear forcing ramp exactly") {
  SystemMatrix z;
  ModelParams p;
  p.sys.Vbb = 1.0;
  p.sys.Qbrain = 1.0;
  const PlasmaProfile ramp({0.0, 1.0, 3.0}, {0.0, 2.0, 0.0});
  const auto s = expm_propagate(z, {0, 0, 0, 0}, ramp, p.sys, {0.0, 0.5, 2.0, 3.0});
  CHECK(s.columns[0][1] == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(s.columns[0][2] == doctest::Approx(1.0 + 1.5).epsilon(1e-14));
  CHECK(s.columns[0][3] == doctest::Approx(3.0).epsilon(1e-14));
}

TEST_CASE("scalar decay under RK4 and DOPRI45") {
  auto f = [](double, const Vec<1>& y) { return Vec<1>(-y); };
  const std::vector<double> grid{1.0};
  const auto rk = rk4_on_grid<1>(f, Vec<1>(1.0), 0.0, grid, 1e-3);
  CHECK(std::abs(rk[0](0) - std::exp(-1.0)) < 1e-9);
  const auto dp = dopri45_on_grid<1>(f, Vec<1>(1.0), 0.0, grid, 1e-12, 1e-12);
  CHECK(std::abs(dp[0](0) - std::exp(-1.0)) < 1e-10);
}

TEST_CASE("zero state with zero plasma stays zero") {
  const ModelParams p;
  const auto zero = PlasmaProfile::constant(0.0, 0.0, 48.0);
  const auto grid = uniform_grid(0.0, 48.0, 50);
  for (const auto& cfg : {SolveConfig::rk4(grid, 1e-2), SolveConfig::dopri45(grid, 1e-9), SolveConfig::oracle(grid)}) {
    const auto s = solve(p.sys, p.drug, zero, ModelVariant::PaperLiteral, InitialState{}, cfg);
    for (const auto& col : s.columns) {
      for (double v : col) CHECK(v == 0.0);
    }
  }
}

TEST_CASE("constant plasma: RK4 against the oracle") {
  const ModelParams p;
  const auto one = PlasmaProfile::constant(1.0, 0.0, 48.0);
  const auto grid = uniform_grid(0.0, 48.0, 200);
  const auto ref = solve(p.sys, p.drug, one, ModelVariant::PaperLiteral, InitialState{}, SolveConfig::oracle(grid));
  const auto rk = solve(p.sys, p.drug, one, ModelVariant::PaperLiteral, InitialState{}, SolveConfig::rk4(grid, 1e-3));
  CHECK(max_rel_error(rk, ref) < 1e-6);
}

TEST_CASE("DOPRI45 at tolerance 1e-10 matches the oracle") {
  const DefaultProblem d;
  const auto ref = d.run(SolveConfig::oracle(d.data.times));
  const auto dp = d.run(SolveConfig::dopri45(d.data.times, 1e-10));
  CHECK(max_rel_error(dp, ref) < 1e-8);
}

TEST_CASE("RK4 is fourth order") {
  const DefaultProblem d;
  const auto ref = d.run(SolveConfig::oracle(d.data.times));
  const double e1 = max_rel_error(d.run(SolveConfig::rk4(d.data.times, 2e-3)), ref);
  const double e2 = max_rel_error(d.run(SolveConfig::rk4(d.data.times, 1e-3)), ref);
  const double ratio = e1 / e2;
  CHECK(ratio >= 12.0);
  CHECK(ratio <= 20.0);
}

TEST_CASE("solutions stay non-negative") {
  const DefaultProblem d;
  for (const auto& cfg : {SolveConfig::rk4(d.data.times, 1e-3), SolveConfig::dopri45(d.data.times, 1e-9),
                          SolveConfig::oracle(d.data.times)}) {
    const auto s = d.run(cfg);
    for (const auto& col : s.columns) {
      for (double v : col) CHECK(v >= -1e-9);
    }
  }
}

TEST_CASE("superposition: scaling the forcing scales the solution") {
  const DefaultProblem d;
  std::vector<double> scaled = d.plasma.values();
  for (auto& v : scaled) v *= 3.5;
  const PlasmaProfile big(d.plasma.times(), scaled);
  const auto base = d.run(SolveConfig::oracle(d.data.times));
  const auto s = solve(d.p.sys, d.p.drug, big, ModelVariant::PaperLiteral, InitialState{},
                       SolveConfig::oracle(d.data.times));
  for (std::size_t k = 0; k < kCompartments; ++k) {
    for (std::size_t i = 0; i < base.size(); ++i) {
      CHECK(std::abs(s.columns[k][i] - 3.5 * base.columns[k][i]) <= 1e-10 * std::max(1e-12, 3.5 * base.columns[k][i]) + 1e-18);
    }
  }
}

TEST_CASE("synthetic data is deterministic and self-consistent") {
  const ModelParams p;
  const auto a = synthesize_dataset(p.sys, p.drug, PlasmaSpec{}, ModelVariant::PaperLiteral, 200, 48.0, 0.0, 9);
  const auto b = synthesize_dataset(p.sys, p.drug, PlasmaSpec{}, ModelVariant::PaperLiteral, 200, 48.0, 0.0, 9);
  CHECK(a == b);
  CHECK(a.size() == 200);
  CHECK(a.times.back() == 48.0);
  REQUIRE(a.plasma.has_value());
  const double peak = *std::max_element(a.plasma->begin(), a.plasma->end());
  CHECK(peak <= 0.06);
  CHECK(PlasmaSpec{}(std::log(10.0) / 0.9) == doctest::Approx(0.06).epsilon(1e-14));

  // restarting the oracle from each row reproduces the next row
  const auto profile = a.plasma_profile();
  const SystemMatrix m = assemble_matrix(p.sys, p.drug);
  for (std::size_t i = 0; i + 1 < a.size(); i += 17) {
    const auto step = expm_propagate(m, a.state(i), profile, p.sys, {a.times[i], a.times[i + 1]});
    for (std::size_t k = 0; k < kCompartments; ++k) {
      CHECK(std::abs(step.columns[k][1] - a.columns[k][i + 1]) < 1e-8 * std::max(1e-6, a.columns[k][i + 1]));
    }
  }

  const auto noisy1 = synthesize_dataset(p.sys, p.drug, PlasmaSpec{}, ModelVariant::PaperLiteral, 50, 48.0, 0.01, 4);
  const auto noisy2 = synthesize_dataset(p.sys, p.drug, PlasmaSpec{}, ModelVariant::PaperLiteral, 50, 48.0, 0.01, 4);
  CHECK(noisy1 == noisy2);
  for (const auto& col : noisy1.columns) {
    for (double v : col) CHECK(v >= 0.0);
  }

  const auto flat = synthesize_dataset(p.sys, p.drug, PlasmaSpec::zero(), ModelVariant::PaperLiteral, 20, 48.0, 0.0, 1);
  for (const auto& col : flat.columns) {
    for (double v : col) CHECK(v == 0.0);
  }
  CHECK_THROWS_AS(synthesize_dataset(p.sys, p.drug, PlasmaSpec{}, ModelVariant::PaperLiteral, 1, 48.0, 0.0, 1),
                  std::invalid_argument);
}

TEST_CASE("solver configuration errors") {
  const ModelParams p;
  const auto one = PlasmaProfile::constant(1.0, 0.0, 48.0);
  CHECK_THROWS_AS(solve(p.sys, p.drug, one, ModelVariant::PaperLiteral, InitialState{},
                        SolveConfig::rk4({1.0, 2.0}, 0.0)),
                  SolverError);
  CHECK_THROWS_AS(solve(p.sys, p.drug, one, ModelVariant::PaperLiteral, InitialState{},
                        SolveConfig::dopri45({1.0, 2.0}, -1.0)),
                  SolverError);
  CHECK_THROWS_AS(solve(p.sys, p.drug, one, ModelVariant::PaperLiteral, InitialState{{0, 0, 0, 0}, 5.0},
                        SolveConfig::oracle({1.0, 2.0})),
                  SolverError);
}
