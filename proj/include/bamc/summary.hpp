#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <map>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "bamc/distribution.hpp"

namespace bamc {

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Empirical quantile with linear interpolation between order statistics of
/// an already sorted sample.
inline double sorted_quantile(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw DataError("quantile of an empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("quantile must lie in [0, 1]");
  const double h = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const double frac = h - static_cast<double>(lo);
  if (frac == 0.0 || lo + 1 >= sorted.size()) return sorted[lo];
  const double a = sorted[lo];
  const double b = sorted[lo + 1];
  if (a == b || a == kNegInf) return a;
  return a + (b - a) * frac;
}

inline double quantile(std::vector<double> values, double q) {
  std::sort(values.begin(), values.end());
  return sorted_quantile(values, q);
}

/// A named series over iterations; the unit of figure data.
struct Series {
  std::string name;
  std::vector<std::size_t> iterations;
  std::vector<double> values;
};

/// Per-iteration quantiles across runs. `runs[r][i]` is run r's value at
/// iteration i + 1; runs must share a length. One series per quantile, named
/// `<prefix>q<100*q>`.
inline std::vector<Series> quantile_summary(const std::vector<std::vector<double>>& runs,
                                            std::span<const double> quantiles, const std::string& prefix = "") {
  if (runs.empty() || runs.front().empty()) throw DataError("quantile_summary: no data");
  const std::size_t n = runs.front().size();
  for (const auto& r : runs)
    if (r.size() != n) throw DataError("quantile_summary: runs have different lengths");
  for (double q : quantiles)
    if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("quantile_summary: quantile outside [0, 1]");

  std::vector<Series> out;
  for (double q : quantiles) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "q%g", q * 100.0);
    Series s{prefix + buf, {}, {}};
    s.iterations.reserve(n);
    s.values.reserve(n);
    out.push_back(std::move(s));
  }
  std::vector<double> column(runs.size());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t r = 0; r < runs.size(); ++r) column[r] = runs[r][i];
    std::sort(column.begin(), column.end());
    for (std::size_t k = 0; k < quantiles.size(); ++k) {
      out[k].iterations.push_back(i + 1);
      out[k].values.push_back(sorted_quantile(column, quantiles[k]));
    }
  }
  return out;
}

/// Centered rolling median. Windows are truncated at the edges; an even
/// number of samples in a truncated window yields the lower median.
inline std::vector<double> rolling_median(std::span<const double> series, std::size_t window) {
  if (window == 0 || window % 2 == 0) throw std::invalid_argument("rolling_median: window must be odd");
  const std::size_t half = window / 2;
  std::vector<double> out(series.size());
  std::vector<double> buf;
  buf.reserve(window);
  for (std::size_t i = 0; i < series.size(); ++i) {
    const std::size_t lo = i >= half ? i - half : 0;
    const std::size_t hi = std::min(series.size(), i + half + 1);
    buf.assign(series.begin() + static_cast<std::ptrdiff_t>(lo), series.begin() + static_cast<std::ptrdiff_t>(hi));
    auto mid = buf.begin() + static_cast<std::ptrdiff_t>((buf.size() - 1) / 2);
    std::nth_element(buf.begin(), mid, buf.end());
    out[i] = *mid;
  }
  return out;
}

struct FigureRow {
  std::size_t iteration = 0;
  std::string series_name;
  double value = 0.0;
};

/// Flattens aligned series into long format (iteration, series_name, value).
inline std::vector<FigureRow> emit_figure_data(const std::vector<Series>& series) {
  std::vector<FigureRow> rows;
  if (series.empty()) return rows;
  const std::size_t n = series.front().values.size();
  for (const auto& s : series) {
    if (s.values.size() != n || s.iterations.size() != n)
      throw DataError("emit_figure_data: series '" + s.name + "' is misaligned");
  }
  for (const auto& s : series)
    for (std::size_t i = 0; i < n; ++i) rows.push_back({s.iterations[i], s.name, s.values[i]});
  return rows;
}

inline std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_figure_csv(std::ostream& out, const std::vector<FigureRow>& rows) {
  out << "iteration,series_name,value\n";
  for (const auto& r : rows) out << r.iteration << ',' << r.series_name << ',' << format_real(r.value) << '\n';
}

/// Regroups long-format rows into series, preserving first-seen order.
inline std::vector<Series> series_from_rows(const std::vector<FigureRow>& rows) {
  std::vector<Series> out;
  std::map<std::string, std::size_t> index;
  for (const auto& r : rows) {
    auto [it, inserted] = index.try_emplace(r.series_name, out.size());
    if (inserted) out.push_back({r.series_name, {}, {}});
    out[it->second].iterations.push_back(r.iteration);
    out[it->second].values.push_back(r.value);
  }
  return out;
}

/// Minimal SVG line chart. Series whose name ends in "q50", "median" or
/// "best" are drawn solid, the rest dashed. Non-finite points are skipped.
inline void write_svg(std::ostream& out, const std::vector<Series>& series, const std::string& title = "") {
  constexpr double width = 800, height = 500, left = 80, right = 200, top = 40, bottom = 50;
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.values.size(); ++i) {
      if (!std::isfinite(s.values[i])) continue;
      xmin = std::min(xmin, static_cast<double>(s.iterations[i]));
      xmax = std::max(xmax, static_cast<double>(s.iterations[i]));
      ymin = std::min(ymin, s.values[i]);
      ymax = std::max(ymax, s.values[i]);
    }
  }
  if (xmin > xmax) xmin = 0, xmax = 1, ymin = 0, ymax = 1;
  if (xmax == xmin) xmax = xmin + 1;
  if (ymax == ymin) ymax = ymin + 1;
  const double pw = width - left - right, ph = height - top - bottom;
  auto px = [&](double x) { return left + (x - xmin) / (xmax - xmin) * pw; };
  auto py = [&](double y) { return top + (ymax - y) / (ymax - ymin) * ph; };

  static constexpr const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
  auto ends_with = [](const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
  };
  auto group_of = [](const std::string& name) {
    auto slash = name.rfind('/');
    return slash == std::string::npos ? std::string() : name.substr(0, slash);
  };
  std::map<std::string, std::size_t> colors;

  char buf[160];
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!title.empty()) out << "<text x=\"" << left << "\" y=\"24\" font-size=\"16\">" << title << "</text>\n";
  std::snprintf(buf, sizeof buf, "<rect x=\"%.1f\" y=\"%.1f\" width=\"%.1f\" height=\"%.1f\" fill=\"none\" stroke=\"black\"/>\n",
                left, top, pw, ph);
  out << buf;
  for (int k = 0; k <= 4; ++k) {
    const double y = ymin + (ymax - ymin) * k / 4.0;
    const double x = xmin + (xmax - xmin) * k / 4.0;
    std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\" font-size=\"11\" text-anchor=\"end\">%.4g</text>\n",
                  left - 6, py(y) + 4, y);
    out << buf;
    std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\" font-size=\"11\" text-anchor=\"middle\">%.0f</text>\n",
                  px(x), top + ph + 18, x);
    out << buf;
  }
  std::size_t legend = 0;
  for (const auto& s : series) {
    const auto [it, inserted] = colors.try_emplace(group_of(s.name), colors.size());
    const char* color = palette[it->second % std::size(palette)];
    const bool solid = ends_with(s.name, "q50") || ends_with(s.name, "median") || ends_with(s.name, "best");
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"" << (solid ? 2 : 1) << '"'
        << (solid ? "" : " stroke-dasharray=\"5,4\"") << " points=\"";
    for (std::size_t i = 0; i < s.values.size(); ++i) {
      if (!std::isfinite(s.values[i])) continue;
      std::snprintf(buf, sizeof buf, "%.2f,%.2f ", px(static_cast<double>(s.iterations[i])), py(s.values[i]));
      out << buf;
    }
    out << "\"/>\n";
    std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\" font-size=\"11\" fill=\"%s\">", left + pw + 10,
                  top + 14.0 * static_cast<double>(++legend), color);
    out << buf << s.name << "</text>\n";
  }
  out << "</svg>\n";
}

}  // namespace bamc
