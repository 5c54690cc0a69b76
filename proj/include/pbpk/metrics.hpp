#pragma once

// Pharmacokinetic summaries of one compartment of a concentration series.

#include <cstddef>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "pbpk/series.hpp"

namespace pbpk {

class TooFewPoints : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct PkSummary {
  std::string compartment;
  double auc = 0.0;   // mg*h/L
  double cmax = 0.0;  // mg/L
  double tmax = 0.0;  // h
  std::optional<double> half_life;  // h
};

/// Linear trapezoid rule over the whole grid.
double auc_trapezoid(const ConcentrationSeries& series, std::size_t compartment);
/// Maximum value and the earliest time it is attained.
std::pair<double, double> cmax_tmax(const ConcentrationSeries& series, std::size_t compartment);
/// ln 2 / (-slope) of a log-linear fit to the positive values among the last
/// ceil(tail_fraction * N) points; nullopt with fewer than three such points
/// or a non-negative slope.
std::optional<double> half_life(const ConcentrationSeries& series, std::size_t compartment,
                                double tail_fraction = 0.25);

PkSummary summarize(const ConcentrationSeries& series, std::size_t compartment, double tail_fraction = 0.25);
std::vector<PkSummary> summarize_all(const ConcentrationSeries& series, double tail_fraction = 0.25);

/// Header "compartment,auc,cmax,tmax,half_life"; an undeterminable half-life is written as "NA".
std::string format_pk_summary(const std::vector<PkSummary>& rows);
void write_pk_summary(const std::vector<PkSummary>& rows, const std::filesystem::path& path);

}  // namespace pbpk
