#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "infoaccess/text.hpp"

// Minimal static SVG charts for the report bundle.
namespace infoaccess::pipeline::svg {

inline std::string escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

inline std::string fmt(double x, int precision = 4) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*g", precision, x);
  return buf;
}

inline const char* palette(std::size_t i) {
  static const char* colors[] = {"#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f",
                                 "#edc948", "#b07aa1", "#ff9da7", "#9c755f", "#bab0ac"};
  return colors[i % 10];
}

class Canvas {
 public:
  Canvas(double width, double height, std::string title) : w_(width), h_(height) {
    os_ << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(w_) << "\" height=\"" << fmt(h_)
        << "\" viewBox=\"0 0 " << fmt(w_) << ' ' << fmt(h_) << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    os_ << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    text(w_ / 2, 18, title, "middle", 13);
  }

  void text(double x, double y, std::string_view s, const char* anchor = "start", int size = 11) {
    os_ << "<text x=\"" << fmt(x) << "\" y=\"" << fmt(y) << "\" text-anchor=\"" << anchor << "\" font-size=\""
        << size << "\">" << escape(s) << "</text>\n";
  }
  void rect(double x, double y, double w, double h, const char* fill, std::string_view extra = {}) {
    os_ << "<rect x=\"" << fmt(x) << "\" y=\"" << fmt(y) << "\" width=\"" << fmt(w) << "\" height=\"" << fmt(h)
        << "\" fill=\"" << fill << "\"" << (extra.empty() ? "" : " ") << extra << "/>\n";
  }
  void line(double x1, double y1, double x2, double y2, const char* stroke = "#333") {
    os_ << "<line x1=\"" << fmt(x1) << "\" y1=\"" << fmt(y1) << "\" x2=\"" << fmt(x2) << "\" y2=\"" << fmt(y2)
        << "\" stroke=\"" << stroke << "\"/>\n";
  }
  void polyline(const std::vector<std::pair<double, double>>& pts, const char* stroke) {
    os_ << "<polyline fill=\"none\" stroke-width=\"1.5\" stroke=\"" << stroke << "\" points=\"";
    for (const auto& [x, y] : pts) os_ << fmt(x, 6) << ',' << fmt(y, 6) << ' ';
    os_ << "\"/>\n";
  }
  void raw(std::string_view s) { os_ << s; }

  std::string finish() {
    os_ << "</svg>\n";
    return os_.str();
  }

  double width() const { return w_; }
  double height() const { return h_; }

 private:
  double w_, h_;
  std::ostringstream os_;
};

struct Plot {
  double left = 60, right = 20, top = 30, bottom = 45;
};

// Bars for counts over [lo_i, hi_i) bins. Counts are printed above bars.
inline std::string histogram(const std::string& title, const std::vector<double>& edges,
                             const std::vector<std::uint64_t>& counts, const std::string& x_label) {
  Canvas c(640, 360, title);
  Plot p;
  const double pw = c.width() - p.left - p.right, ph = c.height() - p.top - p.bottom;
  const double ymax = std::max<double>(1.0, static_cast<double>(*std::max_element(counts.begin(), counts.end())));
  const double x0 = edges.front(), x1 = edges.back();
  auto sx = [&](double x) { return p.left + (x - x0) / (x1 - x0) * pw; };
  auto sy = [&](double y) { return p.top + ph - y / ymax * ph; };
  for (std::size_t b = 0; b < counts.size(); ++b) {
    const double xa = sx(edges[b]), xb = sx(edges[b + 1]);
    const double y = sy(static_cast<double>(counts[b]));
    c.rect(xa + 0.5, y, std::max(0.0, xb - xa - 1), p.top + ph - y, palette(0),
           "data-count=\"" + std::to_string(counts[b]) + "\"");
    if (counts[b] > 0) c.text((xa + xb) / 2, y - 3, std::to_string(counts[b]), "middle", 8);
  }
  c.line(p.left, p.top + ph, p.left + pw, p.top + ph);
  c.line(p.left, p.top, p.left, p.top + ph);
  for (int t = 0; t <= 4; ++t) {
    const double x = x0 + (x1 - x0) * t / 4.0;
    c.text(sx(x), p.top + ph + 14, fmt(x), "middle");
  }
  c.text(p.left - 6, p.top + 8, fmt(ymax), "end");
  c.text(p.left - 6, p.top + ph, "0", "end");
  c.text(p.left + pw / 2, c.height() - 8, x_label, "middle");
  return c.finish();
}

struct DensitySeries {
  std::string label;
  std::vector<double> values;  // observed values
};

// Silverman's rule-of-thumb bandwidth; 0 when the sample has no spread.
inline double silverman_bandwidth(std::vector<double> xs) {
  const auto n = xs.size();
  if (n < 2) return 0.0;
  std::sort(xs.begin(), xs.end());
  double mean = 0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(n);
  double var = 0;
  for (double x : xs) var += (x - mean) * (x - mean);
  const double sd = std::sqrt(var / static_cast<double>(n - 1));
  auto quantile = [&](double q) {
    const double pos = q * static_cast<double>(n - 1);
    const auto i = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(i);
    return i + 1 < n ? xs[i] * (1 - frac) + xs[i + 1] * frac : xs[i];
  };
  const double iqr = quantile(0.75) - quantile(0.25);
  double spread = iqr > 0 ? std::min(sd, iqr / 1.34) : sd;
  return 0.9 * spread * std::pow(static_cast<double>(n), -0.2);
}

inline std::vector<double> gaussian_kde(const std::vector<double>& xs, double bandwidth,
                                        const std::vector<double>& grid) {
  std::vector<double> out(grid.size(), 0.0);
  const double norm = 1.0 / (static_cast<double>(xs.size()) * bandwidth * std::sqrt(2 * M_PI));
  for (std::size_t g = 0; g < grid.size(); ++g) {
    for (double x : xs) {
      const double z = (grid[g] - x) / bandwidth;
      out[g] += std::exp(-0.5 * z * z);
    }
    out[g] *= norm;
  }
  return out;
}

// Gaussian KDE curve per series. Series with fewer than two values or no
// spread are listed in the legend with a note instead of a curve. Every
// legend entry carries its observation count.
inline std::string density_plot(const std::string& title, const std::vector<DensitySeries>& series,
                                const std::string& x_label, std::vector<std::string>* notes = nullptr) {
  Canvas c(640, 380, title);
  Plot p;
  p.right = 180;
  const double pw = c.width() - p.left - p.right, ph = c.height() - p.top - p.bottom;
  double lo = INFINITY, hi = -INFINITY;
  for (const auto& s : series)
    for (double x : s.values) {
      lo = std::min(lo, x);
      hi = std::max(hi, x);
    }
  if (!std::isfinite(lo)) lo = 0, hi = 1;
  if (hi == lo) hi = lo + 1;
  const double pad = 0.1 * (hi - lo);
  lo -= pad;
  hi += pad;
  std::vector<double> grid(200);
  for (std::size_t i = 0; i < grid.size(); ++i) grid[i] = lo + (hi - lo) * i / (grid.size() - 1.0);

  std::vector<std::optional<std::vector<double>>> curves;
  double ymax = 0;
  for (const auto& s : series) {
    const double bw = silverman_bandwidth(s.values);
    if (s.values.size() < 2 || bw <= 0) {
      curves.emplace_back();
      continue;
    }
    auto d = gaussian_kde(s.values, bw, grid);
    ymax = std::max(ymax, *std::max_element(d.begin(), d.end()));
    curves.push_back(std::move(d));
  }
  if (ymax <= 0) ymax = 1;
  auto sx = [&](double x) { return p.left + (x - lo) / (hi - lo) * pw; };
  auto sy = [&](double y) { return p.top + ph - y / ymax * ph; };
  for (std::size_t i = 0; i < series.size(); ++i) {
    const double ly = p.top + 14.0 * static_cast<double>(i) + 10;
    std::string legend = series[i].label + " (n=" + std::to_string(series[i].values.size()) + ")";
    if (!curves[i]) {
      const std::string why = series[i].values.size() < 2 ? "fewer than 2 values" : "no spread";
      legend += ": no density, " + why;
      if (notes) notes->push_back(series[i].label + ": density omitted (" + why + ")");
    } else {
      std::vector<std::pair<double, double>> pts;
      for (std::size_t g = 0; g < grid.size(); ++g) pts.emplace_back(sx(grid[g]), sy((*curves[i])[g]));
      c.polyline(pts, palette(i));
    }
    c.rect(p.left + pw + 10, ly - 8, 10, 10, palette(i));
    c.text(p.left + pw + 24, ly, legend, "start", 10);
  }
  c.line(p.left, p.top + ph, p.left + pw, p.top + ph);
  c.line(p.left, p.top, p.left, p.top + ph);
  for (int t = 0; t <= 4; ++t) {
    const double x = lo + (hi - lo) * t / 4.0;
    c.text(sx(x), p.top + ph + 14, fmt(x), "middle");
  }
  c.text(p.left + pw / 2, c.height() - 8, x_label, "middle");
  return c.finish();
}

// Stacked composition bars: one bar per row label, shares of each category.
inline std::string composition_bars(const std::string& title, const std::vector<std::string>& row_labels,
                                    const std::vector<std::string>& categories,
                                    const std::vector<std::vector<std::uint64_t>>& counts) {
  Canvas c(640, 60 + 28.0 * static_cast<double>(row_labels.size()) + 20, title);
  const double left = 110, width = 360;
  for (std::size_t r = 0; r < row_labels.size(); ++r) {
    const double y = 36 + 28.0 * static_cast<double>(r);
    std::uint64_t total = 0;
    for (auto x : counts[r]) total += x;
    c.text(left - 6, y + 14, row_labels[r] + " (n=" + std::to_string(total) + ")", "end");
    double x = left;
    for (std::size_t k = 0; k < categories.size(); ++k) {
      if (total == 0 || counts[r][k] == 0) continue;
      const double w = width * static_cast<double>(counts[r][k]) / static_cast<double>(total);
      c.rect(x, y, w, 20, palette(k), "data-count=\"" + std::to_string(counts[r][k]) + "\"");
      if (w > 18) c.text(x + w / 2, y + 14, std::to_string(counts[r][k]), "middle", 9);
      x += w;
    }
  }
  for (std::size_t k = 0; k < categories.size(); ++k) {
    const double y = 36 + 14.0 * static_cast<double>(k);
    c.rect(left + width + 20, y, 10, 10, palette(k));
    c.text(left + width + 34, y + 9, categories[k], "start", 10);
  }
  return c.finish();
}

// Square heatmap on [0, 1]. Values below 0 are drawn as 0; the raw value is
// kept in a data attribute.
inline std::string heatmap(const std::string& title, const std::vector<std::string>& labels,
                           const std::vector<std::vector<double>>& values) {
  const auto n = labels.size();
  const double cell = std::clamp(400.0 / std::max<std::size_t>(n, 1), 14.0, 48.0);
  const double left = 60, top = 40;
  Canvas c(left + cell * static_cast<double>(n) + 30, top + cell * static_cast<double>(n) + 40, title);
  for (std::size_t i = 0; i < n; ++i) {
    c.text(left - 4, top + cell * (static_cast<double>(i) + 0.6), labels[i], "end", 9);
    c.text(left + cell * (static_cast<double>(i) + 0.5), top + cell * static_cast<double>(n) + 12, labels[i],
           "middle", 9);
    for (std::size_t j = 0; j < n; ++j) {
      const double raw = values[i][j];
      const double shown = std::clamp(raw, 0.0, 1.0);
      const int shade = static_cast<int>(std::lround(255 * (1 - shown)));
      char fill[16];
      std::snprintf(fill, sizeof fill, "#%02x%02xff", shade, shade);
      c.rect(left + cell * static_cast<double>(j), top + cell * static_cast<double>(i), cell, cell, fill,
             "data-raw=\"" + fmt(raw, 6) + "\" data-shown=\"" + fmt(shown, 6) + "\"");
      if (cell >= 28) {
        c.text(left + cell * (static_cast<double>(j) + 0.5), top + cell * (static_cast<double>(i) + 0.6),
               fmt(shown, 2), "middle", 9);
      }
    }
  }
  return c.finish();
}

}  // namespace infoaccess::pipeline::svg
