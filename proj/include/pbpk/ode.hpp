#pragma once

// Forward solvers for the brain model: fixed-step RK4, adaptive
// Dormand-Prince 4(5), and the exact matrix-exponential propagator used as
// the reference solution.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pbpk/model.hpp"
#include "pbpk/series.hpp"

namespace pbpk {

class SolverError : public std::runtime_error {
 public:
  enum class Kind { StepSizeUnderflow, NonFiniteState, InvalidConfig };
  SolverError(Kind kind, const std::string& message) : std::runtime_error(message), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

enum class SolverMethod { RK4, DOPRI45, ExpmOracle };

struct SolveConfig {
  SolverMethod method = SolverMethod::ExpmOracle;
  double step = 1e-3;   // RK4 step (h)
  double rtol = 1e-9;   // DOPRI45
  double atol = 1e-9;   // DOPRI45
  std::vector<double> grid;  // output times (h)

  static SolveConfig rk4(std::vector<double> grid, double h) {
    SolveConfig c;
    c.method = SolverMethod::RK4;
    c.step = h;
    c.grid = std::move(grid);
    return c;
  }
  static SolveConfig dopri45(std::vector<double> grid, double tol) {
    SolveConfig c;
    c.method = SolverMethod::DOPRI45;
    c.rtol = c.atol = tol;
    c.grid = std::move(grid);
    return c;
  }
  static SolveConfig oracle(std::vector<double> grid) {
    SolveConfig c;
    c.grid = std::move(grid);
    return c;
  }
};

struct InitialState {
  ConcentrationState y0{};
  double t0 = 0.0;
};

/// Uniform grid of n points over [t0, t1], endpoints exact.
std::vector<double> uniform_grid(double t0, double t1, std::size_t n);

ConcentrationSeries solve(const SystemParams& sys, const DrugParams& drug, const PlasmaProfile& plasma,
                          ModelVariant variant, const InitialState& init, const SolveConfig& cfg);

/// Exact solution of y' = A y + Qbrain C_art(t)/Vbb e1 for piecewise-linear
/// C_art. Each interval between consecutive grid points and plasma knots is
/// advanced with exp of the 6x6 augmented matrix [[A, b1, b0], [0, 0, 1], [0, 0, 0]]
/// acting on [y; 0; 1], where b0 + b1 s is the forcing on that interval.
ConcentrationSeries expm_propagate(const SystemMatrix& a, const ConcentrationState& y0, const PlasmaProfile& plasma,
                                   const SystemParams& sys, const std::vector<double>& grid, double t0);
inline ConcentrationSeries expm_propagate(const SystemMatrix& a, const ConcentrationState& y0,
                                          const PlasmaProfile& plasma, const SystemParams& sys,
                                          const std::vector<double>& grid) {
  return expm_propagate(a, y0, plasma, sys, grid, grid.empty() ? 0.0 : grid.front());
}

/// First-order absorption/elimination plasma curve D (e^{-ke t} - e^{-ka t})
/// with D chosen so the peak equals `peak`.
struct PlasmaSpec {
  double ka = 1.0;     // 1/h
  double ke = 0.1;     // 1/h
  double peak = 0.06;  // mg/L

  double operator()(double t) const;
  static PlasmaSpec zero() { return PlasmaSpec{1.0, 0.1, 0.0}; }
};

ConcentrationSeries synthesize_dataset(const SystemParams& sys, const DrugParams& drug, const PlasmaSpec& plasma,
                                       ModelVariant variant, std::size_t n_points, double horizon,
                                       double noise_sd, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Generic integrators. `f(t, y)` returns dy/dt. Both land exactly on every
// grid point; the state at each grid point is appended to the result.

template <int N>
using Vec = Eigen::Matrix<double, N, 1>;

template <int N, typename F>
std::vector<Vec<N>> rk4_on_grid(F&& f, Vec<N> y, double t0, std::span<const double> grid, double h) {
  if (!(h > 0.0)) throw SolverError(SolverError::Kind::InvalidConfig, "RK4 step must be positive");
  std::vector<Vec<N>> out;
  out.reserve(grid.size());
  double t = t0;
  for (double target : grid) {
    if (target < t) throw SolverError(SolverError::Kind::InvalidConfig, "output grid precedes t0 or is unsorted");
    const double span = target - t;
    if (span > 0.0) {
      const auto n = static_cast<long>(std::max(1.0, std::ceil(span / h * (1.0 - 1e-12))));
      const double hs = span / static_cast<double>(n);
      const double start = t;
      for (long i = 0; i < n; ++i) {
        const double ti = start + static_cast<double>(i) * hs;
        const Vec<N> k1 = f(ti, y);
        const Vec<N> k2 = f(ti + 0.5 * hs, (y + 0.5 * hs * k1).eval());
        const Vec<N> k3 = f(ti + 0.5 * hs, (y + 0.5 * hs * k2).eval());
        const Vec<N> k4 = f(ti + hs, (y + hs * k3).eval());
        y += (hs / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      }
      t = target;
      if (!y.allFinite()) {
        throw SolverError(SolverError::Kind::NonFiniteState, "RK4 produced a non-finite state at t=" + std::to_string(t));
      }
    }
    out.push_back(y);
  }
  return out;
}

struct Dopri45Stats {
  long accepted = 0;
  long rejected = 0;
};

template <int N, typename F>
std::vector<Vec<N>> dopri45_on_grid(F&& f, Vec<N> y, double t0, std::span<const double> grid, double rtol,
                                    double atol, Dopri45Stats* stats = nullptr) {
  if (!(rtol > 0.0) || !(atol > 0.0)) {
    throw SolverError(SolverError::Kind::InvalidConfig, "DOPRI45 tolerances must be positive");
  }
  // Dormand-Prince 5(4) tableau
  constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  constexpr double a21 = 1.0 / 5;
  constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                   a65 = -5103.0 / 18656;
  constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                   e6 = 22.0 / 525, e7 = -1.0 / 40;
  constexpr double kMinStep = 1e-12;

  auto scale = [&](const Vec<N>& a, const Vec<N>& b) {
    return (atol + rtol * a.cwiseAbs().cwiseMax(b.cwiseAbs()).array()).matrix();
  };
  auto rms = [](const Vec<N>& v, const Vec<N>& sc) {
    return std::sqrt((v.array() / sc.array()).square().mean());
  };

  std::vector<Vec<N>> out;
  out.reserve(grid.size());
  double t = t0;
  Vec<N> k1 = f(t, y);

  // Hairer's starting step heuristic
  double h = 0.0;
  {
    const Vec<N> sc = scale(y, y);
    const double d0 = rms(y, sc);
    const double d1 = rms(k1, sc);
    double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    const Vec<N> y1 = y + h0 * k1;
    const Vec<N> k = f(t + h0, y1);
    const double d2 = rms((k - k1).eval(), sc) / h0;
    const double dm = std::max(d1, d2);
    const double h1 = dm <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / dm, 0.2);
    h = std::min(100.0 * h0, h1);
  }

  for (double target : grid) {
    if (target < t) throw SolverError(SolverError::Kind::InvalidConfig, "output grid precedes t0 or is unsorted");
    while (t < target) {
      bool lands = false;
      double hs = h;
      if (t + hs >= target) {
        hs = target - t;
        lands = true;
      }
      const Vec<N> k2 = f(t + c2 * hs, (y + hs * (a21 * k1)).eval());
      const Vec<N> k3 = f(t + c3 * hs, (y + hs * (a31 * k1 + a32 * k2)).eval());
      const Vec<N> k4 = f(t + c4 * hs, (y + hs * (a41 * k1 + a42 * k2 + a43 * k3)).eval());
      const Vec<N> k5 = f(t + c5 * hs, (y + hs * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4)).eval());
      const Vec<N> k6 = f(t + hs, (y + hs * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5)).eval());
      const Vec<N> y_new = y + hs * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
      const double t_new = lands ? target : t + hs;
      const Vec<N> k7 = f(t_new, y_new);
      const Vec<N> err = hs * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
      const double en = rms(err, scale(y, y_new));

      if (!std::isfinite(en)) {
        h = 0.2 * hs;
      } else if (en <= 1.0) {
        if (!y_new.allFinite()) {
          throw SolverError(SolverError::Kind::NonFiniteState,
                            "DOPRI45 produced a non-finite state at t=" + std::to_string(t_new));
        }
        t = t_new;
        y = y_new;
        k1 = k7;
        const double fac = en == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(en, -0.2), 0.2, 5.0);
        h = lands ? std::max(h, hs * fac) : hs * fac;
        if (stats) ++stats->accepted;
        continue;
      } else {
        h = hs * std::clamp(0.9 * std::pow(en, -0.2), 0.2, 1.0);
        if (stats) ++stats->rejected;
      }
      if (h < kMinStep) {
        throw SolverError(SolverError::Kind::StepSizeUnderflow,
                          "DOPRI45 step size underflow at t=" + std::to_string(t));
      }
    }
    out.push_back(y);
  }
  return out;
}

}  // namespace pbpk
