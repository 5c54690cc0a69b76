#pragma once

#include <array>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "pbpk/model.hpp"

namespace pbpk {

/// Arterial plasma samples defining the exogenous input C_art(t).
class PlasmaProfile {
 public:
  PlasmaProfile() = default;
  /// Throws std::invalid_argument unless times are strictly increasing, there
  /// are at least two knots, and every value is finite and non-negative.
  PlasmaProfile(std::vector<double> times, std::vector<double> values);

  /// Profile that is `value` everywhere (two knots spanning [t0, t1]).
  static PlasmaProfile constant(double value, double t0 = 0.0, double t1 = 1.0);

  const std::vector<double>& times() const { return times_; }
  const std::vector<double>& values() const { return values_; }
  std::size_t size() const { return times_.size(); }

 private:
  std::vector<double> times_;
  std::vector<double> values_;
};

/// Piecewise-linear interpolation with constant extrapolation outside the knots.
double linear_interp(const PlasmaProfile& profile, double t);

/// Time grid plus one column per compartment and an optional plasma column.
struct ConcentrationSeries {
  std::vector<double> times;
  std::array<std::vector<double>, kCompartments> columns;
  std::optional<std::vector<double>> plasma;

  std::size_t size() const { return times.size(); }
  bool empty() const { return times.empty(); }

  const std::vector<double>& column(std::size_t compartment) const { return columns.at(compartment); }
  ConcentrationState state(std::size_t row) const {
    return {columns[0][row], columns[1][row], columns[2][row], columns[3][row]};
  }
  void push_back(double t, const ConcentrationState& y);

  /// Plasma column as an interpolation profile. Throws if the column is absent.
  PlasmaProfile plasma_profile() const;

  bool operator==(const ConcentrationSeries&) const = default;
};

/// Throws std::invalid_argument when lengths differ, times are not strictly
/// increasing, or any entry is non-finite.
void validate(const ConcentrationSeries& series);

}  // namespace pbpk
