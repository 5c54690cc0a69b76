#include "pbpk/metrics.hpp"

#include <cmath>

#include "pbpk/dataio.hpp"

namespace pbpk {

namespace {

const std::vector<double>& column(const ConcentrationSeries& series, std::size_t compartment) {
  if (compartment >= kCompartments) throw std::out_of_range("compartment index out of range");
  return series.columns[compartment];
}

}  // namespace

double auc_trapezoid(const ConcentrationSeries& series, std::size_t compartment) {
  const auto& c = column(series, compartment);
  if (series.size() < 2) throw TooFewPoints("AUC needs at least two points");
  double area = 0.0;
  for (std::size_t i = 1; i < series.size(); ++i) {
    area += 0.5 * (series.times[i] - series.times[i - 1]) * (c[i] + c[i - 1]);
  }
  return area;
}

std::pair<double, double> cmax_tmax(const ConcentrationSeries& series, std::size_t compartment) {
  const auto& c = column(series, compartment);
  if (series.empty()) throw TooFewPoints("Cmax needs at least one point");
  std::size_t best = 0;
  for (std::size_t i = 1; i < c.size(); ++i) {
    if (c[i] > c[best]) best = i;
  }
  return {c[best], series.times[best]};
}

std::optional<double> half_life(const ConcentrationSeries& series, std::size_t compartment, double tail_fraction) {
  const auto& c = column(series, compartment);
  if (!(tail_fraction > 0.0 && tail_fraction <= 1.0)) {
    throw std::invalid_argument("tail fraction must lie in (0, 1]");
  }
  const std::size_t n = series.size();
  const auto tail = std::min(n, static_cast<std::size_t>(std::ceil(tail_fraction * static_cast<double>(n))));
  std::vector<double> t;
  std::vector<double> y;
  for (std::size_t i = n - tail; i < n; ++i) {
    if (c[i] > 0.0) {
      t.push_back(series.times[i]);
      y.push_back(std::log(c[i]));
    }
  }
  if (t.size() < 3) return std::nullopt;
  double t_mean = 0.0;
  double y_mean = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    t_mean += t[i];
    y_mean += y[i];
  }
  t_mean /= static_cast<double>(t.size());
  y_mean /= static_cast<double>(t.size());
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    sxy += (t[i] - t_mean) * (y[i] - y_mean);
    sxx += (t[i] - t_mean) * (t[i] - t_mean);
  }
  if (!(sxx > 0.0)) return std::nullopt;
  const double slope = sxy / sxx;
  if (!(slope < 0.0)) return std::nullopt;
  return std::log(2.0) / -slope;
}

PkSummary summarize(const ConcentrationSeries& series, std::size_t compartment, double tail_fraction) {
  PkSummary s;
  s.compartment = std::string(kCompartmentNames.at(compartment));
  s.auc = auc_trapezoid(series, compartment);
  std::tie(s.cmax, s.tmax) = cmax_tmax(series, compartment);
  s.half_life = half_life(series, compartment, tail_fraction);
  return s;
}

std::vector<PkSummary> summarize_all(const ConcentrationSeries& series, double tail_fraction) {
  std::vector<PkSummary> out;
  for (std::size_t k = 0; k < kCompartments; ++k) out.push_back(summarize(series, k, tail_fraction));
  return out;
}

std::string format_pk_summary(const std::vector<PkSummary>& rows) {
  std::string out = "compartment,auc,cmax,tmax,half_life\n";
  for (const auto& r : rows) {
    out += r.compartment + "," + format_number(r.auc) + "," + format_number(r.cmax) + "," + format_number(r.tmax) +
           "," + (r.half_life ? format_number(*r.half_life) : std::string("NA")) + "\n";
  }
  return out;
}

void write_pk_summary(const std::vector<PkSummary>& rows, const std::filesystem::path& path) {
  write_text(path, format_pk_summary(rows));
}

}  // namespace pbpk
