#pragma once

// CSV exchange formats, training artifacts and SVG line plots.

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "pbpk/series.hpp"

namespace pbpk {

class DataError : public std::runtime_error {
 public:
  enum class Kind { MissingColumn, NonMonotonicTime, NonNumericCell, Io, EmptyPlot, Format };

  DataError(Kind kind, std::string detail, const std::string& message)
      : std::runtime_error(message), kind_(kind), detail_(std::move(detail)) {}

  Kind kind() const { return kind_; }
  /// Offending column name, row number or path, depending on kind().
  const std::string& detail() const { return detail_; }

 private:
  Kind kind_;
  std::string detail_;
};

inline constexpr std::string_view kSeriesHeader = "Time,Cbb,Cbm,Cccsf,Cscsf,Cplasma";

/// 17 significant digits, shortest form that round-trips.
std::string format_number(double value);

/// Columns are matched case-insensitively by header name; Cplasma is optional.
/// Row numbers in errors count data rows from 0 (the header line is not counted).
ConcentrationSeries read_series(const std::filesystem::path& path);
ConcentrationSeries parse_series(std::string_view text);

void write_series(const ConcentrationSeries& series, const std::filesystem::path& path);
std::string format_series(const ConcentrationSeries& series);

// ---------------------------------------------------------------------------
// Training artifacts

struct LossRecord {
  long iteration = 0;
  double data = 0.0;   // sum over compartments of the per-compartment MSE
  double ode = 0.0;
  double ic = 0.0;
  double total = 0.0;  // weighted total actually minimized
};

struct ParamRecord {
  long iteration = 0;
  std::vector<double> values;  // constrained, physical units
};

struct RunArtifacts {
  std::vector<LossRecord> losses;
  std::vector<std::string> param_names;
  std::vector<ParamRecord> params;
  ConcentrationSeries prediction;
  double seconds = 0.0;
};

inline constexpr std::string_view kLossHeader = "iter,loss_data,loss_ode,loss_ic,loss_total";

void write_loss_history(const std::vector<LossRecord>& losses, const std::filesystem::path& path);
std::vector<LossRecord> read_loss_history(const std::filesystem::path& path);

void write_param_trajectory(const std::vector<std::string>& names, const std::vector<ParamRecord>& rows,
                            const std::filesystem::path& path);
std::vector<ParamRecord> read_param_trajectory(const std::filesystem::path& path,
                                               std::vector<std::string>* names = nullptr);

// ---------------------------------------------------------------------------
// Plotting

struct LabeledSeries {
  std::string label;
  ConcentrationSeries series;
};

/// Standalone SVG (1000x700 viewBox), one polyline per labeled series.
std::string render_plot(const std::vector<LabeledSeries>& series, std::size_t compartment);
void emit_plot(const std::vector<LabeledSeries>& series, std::size_t compartment,
               const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Small helpers shared by the CLI and tools

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, std::string_view text);
std::vector<std::string> split(std::string_view line, char sep);
double parse_double(std::string_view cell);

}  // namespace pbpk
