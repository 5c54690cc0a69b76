#include "pbpk/ode.hpp"

#include <random>

#include "pbpk/expm.hpp"

namespace pbpk {

std::vector<double> uniform_grid(double t0, double t1, std::size_t n) {
  if (n < 2) throw std::invalid_argument("uniform grid needs at least two points");
  std::vector<double> g(n);
  const double step = (t1 - t0) / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) g[i] = t0 + step * static_cast<double>(i);
  g.back() = t1;
  return g;
}

namespace {

void check_grid(const std::vector<double>& grid, double t0) {
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!std::isfinite(grid[i])) throw SolverError(SolverError::Kind::InvalidConfig, "non-finite output time");
    if (i > 0 && !(grid[i] > grid[i - 1])) {
      throw SolverError(SolverError::Kind::InvalidConfig, "output grid must be strictly increasing");
    }
  }
  if (!grid.empty() && grid.front() < t0) {
    throw SolverError(SolverError::Kind::InvalidConfig, "output grid starts before t0");
  }
}

ConcentrationSeries to_series(const std::vector<double>& grid, const std::vector<Vec<4>>& states) {
  ConcentrationSeries s;
  s.times.reserve(grid.size());
  for (auto& c : s.columns) c.reserve(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    s.push_back(grid[i], {states[i](0), states[i](1), states[i](2), states[i](3)});
  }
  return s;
}

}  // namespace

ConcentrationSeries solve(const SystemParams& sys, const DrugParams& drug, const PlasmaProfile& plasma,
                          ModelVariant variant, const InitialState& init, const SolveConfig& cfg) {
  check_grid(cfg.grid, init.t0);
  for (double v : init.y0) {
    if (!std::isfinite(v)) throw SolverError(SolverError::Kind::InvalidConfig, "non-finite initial state");
  }
  const SystemMatrix m = assemble_matrix(sys, drug, variant);
  if (cfg.method == SolverMethod::ExpmOracle) {
    return expm_propagate(m, init.y0, plasma, sys, cfg.grid, init.t0);
  }

  const Eigen::Matrix4d a = m.a;
  const double inflow = sys.Qbrain / sys.Vbb;
  auto f = [&](double t, const Vec<4>& y) -> Vec<4> {
    Vec<4> dy = a * y;
    dy(0) += inflow * linear_interp(plasma, t);
    return dy;
  };
  const Vec<4> y0(init.y0[0], init.y0[1], init.y0[2], init.y0[3]);
  const std::span<const double> grid(cfg.grid);
  if (cfg.method == SolverMethod::RK4) return to_series(cfg.grid, rk4_on_grid<4>(f, y0, init.t0, grid, cfg.step));
  return to_series(cfg.grid, dopri45_on_grid<4>(f, y0, init.t0, grid, cfg.rtol, cfg.atol));
}

ConcentrationSeries expm_propagate(const SystemMatrix& a, const ConcentrationState& y0, const PlasmaProfile& plasma,
                                   const SystemParams& sys, const std::vector<double>& grid, double t0) {
  check_grid(grid, t0);
  const double inflow = sys.Qbrain / sys.Vbb;
  const auto& knots = plasma.times();

  Eigen::Matrix<double, 6, 6> aug = Eigen::Matrix<double, 6, 6>::Zero();
  aug.topLeftCorner<4, 4>() = a.a;
  aug(4, 5) = 1.0;

  Eigen::Matrix<double, 6, 1> z = Eigen::Matrix<double, 6, 1>::Zero();
  for (int i = 0; i < 4; ++i) z(i) = y0[i];

  auto advance = [&](double ta, double tb) {
    const double dt = tb - ta;
    if (dt <= 0.0) return;
    const double fa = inflow * linear_interp(plasma, ta);
    const double fb = inflow * linear_interp(plasma, tb);
    aug(0, 4) = (fb - fa) / dt;  // slope, multiplies s
    aug(0, 5) = fa;              // offset, multiplies the constant 1
    const Eigen::MatrixXd e = expm(Eigen::MatrixXd(aug * dt));
    z(4) = 0.0;
    z(5) = 1.0;
    z = (e * z).eval();
  };

  ConcentrationSeries out;
  double t = t0;
  for (double target : grid) {
    // split at interior plasma knots so the forcing is affine on every piece
    auto it = std::upper_bound(knots.begin(), knots.end(), t);
    while (it != knots.end() && *it < target) {
      advance(t, *it);
      t = *it;
      ++it;
    }
    advance(t, target);
    t = target;
    ConcentrationState y{z(0), z(1), z(2), z(3)};
    for (double v : y) {
      if (!std::isfinite(v)) {
        throw SolverError(SolverError::Kind::NonFiniteState,
                          "matrix-exponential propagation produced a non-finite state at t=" + std::to_string(t));
      }
    }
    out.push_back(t, y);
  }
  return out;
}

double PlasmaSpec::operator()(double t) const {
  if (peak == 0.0) return 0.0;
  if (t <= 0.0) return 0.0;
  double shape_peak = 0.0;
  if (ka == ke) {
    // limit k t e^{-k t}, peak at 1/k
    shape_peak = std::exp(-1.0);
    return peak * ka * t * std::exp(-ka * t) / shape_peak;
  }
  const double t_peak = std::log(ka / ke) / (ka - ke);
  shape_peak = std::exp(-ke * t_peak) - std::exp(-ka * t_peak);
  return peak * (std::exp(-ke * t) - std::exp(-ka * t)) / shape_peak;
}

ConcentrationSeries synthesize_dataset(const SystemParams& sys, const DrugParams& drug, const PlasmaSpec& plasma,
                                       ModelVariant variant, std::size_t n_points, double horizon, double noise_sd,
                                       std::uint64_t seed) {
  if (n_points < 2) throw std::invalid_argument("synthesize_dataset: need at least two points");
  if (!(horizon > 0.0)) throw std::invalid_argument("synthesize_dataset: horizon must be positive");
  if (!(noise_sd >= 0.0)) throw std::invalid_argument("synthesize_dataset: noise sd must be non-negative");
  if (!(plasma.ka > 0.0) || !(plasma.ke > 0.0) || !(plasma.peak >= 0.0)) {
    throw std::invalid_argument("synthesize_dataset: invalid plasma curve");
  }

  const std::vector<double> grid = uniform_grid(0.0, horizon, n_points);
  std::vector<double> c_art(n_points);
  for (std::size_t i = 0; i < n_points; ++i) c_art[i] = plasma(grid[i]);
  const PlasmaProfile profile(grid, c_art);

  ConcentrationSeries series =
      solve(sys, drug, profile, variant, InitialState{}, SolveConfig::oracle(grid));
  if (noise_sd > 0.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, noise_sd);
    for (std::size_t i = 0; i < n_points; ++i) {
      for (auto& col : series.columns) col[i] = std::max(0.0, col[i] + noise(rng));
    }
  }
  series.plasma = std::move(c_art);
  return series;
}

}  // namespace pbpk
