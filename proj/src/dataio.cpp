#include "pbpk/dataio.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>

#include <fmt/format.h>

namespace pbpk {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::optional<double> to_double(std::string_view cell) {
  cell = trim(cell);
  if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
  double v = 0.0;
  const auto* end = cell.data() + cell.size();
  const auto [ptr, ec] = std::from_chars(cell.data(), end, v);
  if (ec != std::errc() || ptr != end || cell.empty()) return std::nullopt;
  return v;
}

std::vector<std::string_view> lines_of(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    if (end == text.size()) break;
    start = end + 1;
  }
  while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
  return lines;
}

}  // namespace

std::string format_number(double value) { return fmt::format("{:.17g}", value); }

std::vector<std::string> split(std::string_view line, char sep) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t end = line.find(sep, start);
    if (end == std::string_view::npos) {
      cells.emplace_back(trim(line.substr(start)));
      break;
    }
    cells.emplace_back(trim(line.substr(start, end - start)));
    start = end + 1;
  }
  return cells;
}

double parse_double(std::string_view cell) {
  const auto v = to_double(cell);
  if (!v) {
    throw DataError(DataError::Kind::NonNumericCell, std::string(cell),
                    "not a number: '" + std::string(cell) + "'");
  }
  return *v;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(DataError::Kind::Io, path.string(), "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError(DataError::Kind::Io, path.string(), "cannot write " + path.string());
  out << text;
  out.flush();
  if (!out) throw DataError(DataError::Kind::Io, path.string(), "write failed for " + path.string());
}

// ---------------------------------------------------------------------------

ConcentrationSeries parse_series(std::string_view text) {
  const auto lines = lines_of(text);
  if (lines.empty()) throw DataError(DataError::Kind::MissingColumn, "Time", "empty file: missing header");

  const auto header = split(lines.front(), ',');
  auto find_column = [&](std::string_view name) -> std::optional<std::size_t> {
    const std::string key = lower(name);
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (lower(header[i]) == key) return i;
    }
    return std::nullopt;
  };
  auto require = [&](std::string_view name) {
    const auto idx = find_column(name);
    if (!idx) {
      throw DataError(DataError::Kind::MissingColumn, std::string(name),
                      "missing column '" + std::string(name) + "'");
    }
    return *idx;
  };

  const std::size_t time_col = require("Time");
  std::array<std::size_t, kCompartments> comp_cols{};
  for (std::size_t k = 0; k < kCompartments; ++k) comp_cols[k] = require(kCompartmentNames[k]);
  const auto plasma_col = find_column("Cplasma");

  ConcentrationSeries series;
  if (plasma_col) series.plasma.emplace();

  for (std::size_t li = 1; li < lines.size(); ++li) {
    const std::size_t row = li - 1;
    if (trim(lines[li]).empty()) continue;
    const auto cells = split(lines[li], ',');
    auto cell = [&](std::size_t col, std::string_view name) {
      const std::string where = std::string(name) + " row " + std::to_string(row);
      if (col >= cells.size()) {
        throw DataError(DataError::Kind::NonNumericCell, where, "missing cell in column " + where);
      }
      const auto v = to_double(cells[col]);
      if (!v || !std::isfinite(*v)) {
        throw DataError(DataError::Kind::NonNumericCell, where,
                        "non-numeric cell '" + cells[col] + "' in column " + where);
      }
      return *v;
    };
    const double t = cell(time_col, "Time");
    if (!series.times.empty() && !(t > series.times.back())) {
      throw DataError(DataError::Kind::NonMonotonicTime, std::to_string(row),
                      "time not strictly increasing at row " + std::to_string(row));
    }
    series.times.push_back(t);
    for (std::size_t k = 0; k < kCompartments; ++k) {
      series.columns[k].push_back(cell(comp_cols[k], kCompartmentNames[k]));
    }
    if (plasma_col) series.plasma->push_back(cell(*plasma_col, "Cplasma"));
  }
  return series;
}

ConcentrationSeries read_series(const std::filesystem::path& path) { return parse_series(read_text(path)); }

std::string format_series(const ConcentrationSeries& series) {
  validate(series);
  std::string out;
  out += series.plasma ? "Time,Cbb,Cbm,Cccsf,Cscsf,Cplasma\n" : "Time,Cbb,Cbm,Cccsf,Cscsf\n";
  for (std::size_t i = 0; i < series.size(); ++i) {
    out += format_number(series.times[i]);
    for (std::size_t k = 0; k < kCompartments; ++k) {
      out += ',';
      out += format_number(series.columns[k][i]);
    }
    if (series.plasma) {
      out += ',';
      out += format_number((*series.plasma)[i]);
    }
    out += '\n';
  }
  return out;
}

void write_series(const ConcentrationSeries& series, const std::filesystem::path& path) {
  write_text(path, format_series(series));
}

// ---------------------------------------------------------------------------

void write_loss_history(const std::vector<LossRecord>& losses, const std::filesystem::path& path) {
  std::string out(kLossHeader);
  out += '\n';
  for (const auto& r : losses) {
    out += fmt::format("{},{},{},{},{}\n", r.iteration, format_number(r.data), format_number(r.ode),
                       format_number(r.ic), format_number(r.total));
  }
  write_text(path, out);
}

std::vector<LossRecord> read_loss_history(const std::filesystem::path& path) {
  const std::string text = read_text(path);
  const auto lines = lines_of(text);
  if (lines.empty() || trim(lines.front()) != kLossHeader) {
    throw DataError(DataError::Kind::Format, path.string(), "unexpected loss-history header in " + path.string());
  }
  std::vector<LossRecord> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto cells = split(lines[i], ',');
    if (cells.size() != 5) {
      throw DataError(DataError::Kind::Format, std::to_string(i), "malformed loss-history row " + std::to_string(i));
    }
    LossRecord r;
    r.iteration = static_cast<long>(parse_double(cells[0]));
    r.data = parse_double(cells[1]);
    r.ode = parse_double(cells[2]);
    r.ic = parse_double(cells[3]);
    r.total = parse_double(cells[4]);
    out.push_back(r);
  }
  return out;
}

void write_param_trajectory(const std::vector<std::string>& names, const std::vector<ParamRecord>& rows,
                            const std::filesystem::path& path) {
  std::string out = "iter";
  for (const auto& n : names) out += "," + n;
  out += '\n';
  for (const auto& r : rows) {
    out += std::to_string(r.iteration);
    for (double v : r.values) out += "," + format_number(v);
    out += '\n';
  }
  write_text(path, out);
}

std::vector<ParamRecord> read_param_trajectory(const std::filesystem::path& path, std::vector<std::string>* names) {
  const std::string text = read_text(path);
  const auto lines = lines_of(text);
  if (lines.empty()) throw DataError(DataError::Kind::Format, path.string(), "empty trajectory file");
  auto header = split(lines.front(), ',');
  if (header.empty() || header.front() != "iter") {
    throw DataError(DataError::Kind::Format, path.string(), "trajectory header must start with 'iter'");
  }
  if (names) names->assign(header.begin() + 1, header.end());
  std::vector<ParamRecord> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto cells = split(lines[i], ',');
    if (cells.size() != header.size()) {
      throw DataError(DataError::Kind::Format, std::to_string(i), "malformed trajectory row " + std::to_string(i));
    }
    ParamRecord r;
    r.iteration = static_cast<long>(parse_double(cells[0]));
    for (std::size_t c = 1; c < cells.size(); ++c) r.values.push_back(parse_double(cells[c]));
    out.push_back(std::move(r));
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

constexpr double kWidth = 1000.0;
constexpr double kHeight = 700.0;
constexpr double kLeft = 100.0;
constexpr double kRight = 40.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 80.0;

constexpr std::array<const char*, 8> kPalette = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                                 "#9467bd", "#8c564b", "#e377c2", "#17becf"};

std::string escape_xml(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string render_plot(const std::vector<LabeledSeries>& series, std::size_t compartment) {
  if (series.empty()) throw DataError(DataError::Kind::EmptyPlot, "", "nothing to plot");
  if (compartment >= kCompartments) throw std::out_of_range("compartment index out of range");

  double x_min = std::numeric_limits<double>::infinity();
  double x_max = -x_min;
  double y_min = 0.0;
  double y_max = -std::numeric_limits<double>::infinity();
  for (const auto& s : series) {
    const auto& col = s.series.column(compartment);
    for (std::size_t i = 0; i < s.series.size(); ++i) {
      if (!std::isfinite(s.series.times[i]) || !std::isfinite(col[i])) {
        throw std::invalid_argument("plot: non-finite value in series '" + s.label + "'");
      }
      x_min = std::min(x_min, s.series.times[i]);
      x_max = std::max(x_max, s.series.times[i]);
      y_min = std::min(y_min, col[i]);
      y_max = std::max(y_max, col[i]);
    }
  }
  if (!std::isfinite(x_min)) {
    x_min = 0.0;
    x_max = 1.0;
  }
  if (x_max <= x_min) x_max = x_min + 1.0;
  if (!std::isfinite(y_max) || y_max <= y_min) y_max = y_min + 1.0;
  y_max += 0.05 * (y_max - y_min);

  const double pw = kWidth - kLeft - kRight;
  const double ph = kHeight - kTop - kBottom;
  auto sx = [&](double x) { return kLeft + (x - x_min) / (x_max - x_min) * pw; };
  auto sy = [&](double y) { return kTop + (1.0 - (y - y_min) / (y_max - y_min)) * ph; };

  std::string out;
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 1000 700\" width=\"1000\" height=\"700\">\n";
  out += "<rect x=\"0\" y=\"0\" width=\"1000\" height=\"700\" fill=\"white\"/>\n";
  out += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>\n",
                     kLeft, kTop, pw, ph);
  for (int i = 0; i <= 5; ++i) {
    const double xv = x_min + (x_max - x_min) * i / 5.0;
    const double yv = y_min + (y_max - y_min) * i / 5.0;
    out += fmt::format("<line x1=\"{0:.2f}\" y1=\"{1:.2f}\" x2=\"{0:.2f}\" y2=\"{2:.2f}\" stroke=\"black\"/>\n",
                       sx(xv), kTop + ph, kTop + ph + 6);
    out += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" font-size=\"14\" text-anchor=\"middle\">{:.4g}</text>\n",
                       sx(xv), kTop + ph + 24, xv);
    out += fmt::format("<line x1=\"{0:.2f}\" y1=\"{1:.2f}\" x2=\"{2:.2f}\" y2=\"{1:.2f}\" stroke=\"black\"/>\n",
                       kLeft - 6, sy(yv), kLeft);
    out += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" font-size=\"14\" text-anchor=\"end\">{:.4g}</text>\n",
                       kLeft - 10, sy(yv) + 5, yv);
  }
  out += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" font-size=\"18\" text-anchor=\"middle\">Time (h)</text>\n",
                     kLeft + pw / 2, kHeight - 20);
  out += fmt::format(
      "<text x=\"25\" y=\"{0:.2f}\" font-size=\"18\" text-anchor=\"middle\" transform=\"rotate(-90 25 {0:.2f})\">"
      "Concentration (mg/L)</text>\n",
      kTop + ph / 2);
  out += fmt::format("<text x=\"{:.2f}\" y=\"28\" font-size=\"18\" text-anchor=\"middle\">{}</text>\n",
                     kLeft + pw / 2, kCompartmentNames[compartment]);

  for (std::size_t s = 0; s < series.size(); ++s) {
    const auto& ser = series[s].series;
    const auto& col = ser.column(compartment);
    const char* color = kPalette[s % kPalette.size()];
    out += fmt::format("<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"2\" points=\"", color);
    for (std::size_t i = 0; i < ser.size(); ++i) {
      if (i) out += ' ';
      out += fmt::format("{:.2f},{:.2f}", sx(ser.times[i]), sy(col[i]));
    }
    out += "\"/>\n";
  }

  out += "<g class=\"legend\">\n";
  for (std::size_t s = 0; s < series.size(); ++s) {
    const double y = kTop + 20 + 22.0 * static_cast<double>(s);
    const double x = kLeft + pw - 220;
    out += fmt::format("<line x1=\"{:.2f}\" y1=\"{:.2f}\" x2=\"{:.2f}\" y2=\"{:.2f}\" stroke=\"{}\" stroke-width=\"3\"/>\n",
                       x, y, x + 30, y, kPalette[s % kPalette.size()]);
    out += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" font-size=\"15\">{}</text>\n", x + 38, y + 5,
                       escape_xml(series[s].label));
  }
  out += "</g>\n</svg>\n";
  return out;
}

void emit_plot(const std::vector<LabeledSeries>& series, std::size_t compartment,
               const std::filesystem::path& path) {
  write_text(path, render_plot(series, compartment));
}

}  // namespace pbpk
