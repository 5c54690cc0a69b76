#include "pbpk/series.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace pbpk {

PlasmaProfile::PlasmaProfile(std::vector<double> times, std::vector<double> values)
    : times_(std::move(times)), values_(std::move(values)) {
  if (times_.size() != values_.size()) {
    throw std::invalid_argument("plasma profile: times and values differ in length");
  }
  if (times_.size() < 2) throw std::invalid_argument("plasma profile: need at least two knots");
  for (std::size_t i = 0; i < times_.size(); ++i) {
    if (!std::isfinite(times_[i]) || !std::isfinite(values_[i])) {
      throw std::invalid_argument("plasma profile: non-finite entry at knot " + std::to_string(i));
    }
    if (values_[i] < 0.0) {
      throw std::invalid_argument("plasma profile: negative concentration at knot " + std::to_string(i));
    }
    if (i > 0 && !(times_[i] > times_[i - 1])) {
      throw std::invalid_argument("plasma profile: times not strictly increasing at knot " +
                                  std::to_string(i));
    }
  }
}

PlasmaProfile PlasmaProfile::constant(double value, double t0, double t1) {
  return PlasmaProfile({t0, t1}, {value, value});
}

double linear_interp(const PlasmaProfile& profile, double t) {
  const auto& ts = profile.times();
  const auto& vs = profile.values();
  if (ts.empty()) return 0.0;
  if (t <= ts.front()) return vs.front();
  if (t >= ts.back()) return vs.back();
  // first knot strictly greater than t; t lies in [ts[hi-1], ts[hi])
  const auto it = std::upper_bound(ts.begin(), ts.end(), t);
  const std::size_t hi = static_cast<std::size_t>(it - ts.begin());
  const std::size_t lo = hi - 1;
  const double frac = (t - ts[lo]) / (ts[hi] - ts[lo]);
  return vs[lo] + (vs[hi] - vs[lo]) * frac;
}

void ConcentrationSeries::push_back(double t, const ConcentrationState& y) {
  times.push_back(t);
  for (std::size_t k = 0; k < kCompartments; ++k) columns[k].push_back(y[k]);
}

PlasmaProfile ConcentrationSeries::plasma_profile() const {
  if (!plasma) throw std::invalid_argument("series has no plasma column");
  return PlasmaProfile(times, *plasma);
}

void validate(const ConcentrationSeries& series) {
  const std::size_t n = series.times.size();
  for (std::size_t k = 0; k < kCompartments; ++k) {
    if (series.columns[k].size() != n) {
      throw std::invalid_argument("series column " + std::string(kCompartmentNames[k]) +
                                  " has the wrong length");
    }
  }
  if (series.plasma && series.plasma->size() != n) {
    throw std::invalid_argument("series plasma column has the wrong length");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(series.times[i])) throw std::invalid_argument("non-finite time");
    if (i > 0 && !(series.times[i] > series.times[i - 1])) {
      throw std::invalid_argument("series times not strictly increasing at row " + std::to_string(i));
    }
    for (std::size_t k = 0; k < kCompartments; ++k) {
      if (!std::isfinite(series.columns[k][i])) {
        throw std::invalid_argument("non-finite concentration at row " + std::to_string(i));
      }
    }
    if (series.plasma && !std::isfinite((*series.plasma)[i])) {
      throw std::invalid_argument("non-finite plasma value at row " + std::to_string(i));
    }
  }
}

}  // namespace pbpk
