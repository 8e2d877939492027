#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "csar/errors.hpp"

// Just enough SVG to ship plots next to the CSVs without an external plotting
// dependency: polyline series with markers, linear or log10 axes, ticks, grid,
// legend. Output is deterministic (fixed-precision coordinates).

namespace csar {

struct Series {
  std::string label;
  std::vector<std::pair<double, double>> points;
  bool draw_line = true;  // false: scatter only
};

struct PlotOptions {
  std::string title;
  std::string xlabel;
  std::string ylabel;
  bool logx = false;
  bool logy = false;
  int width = 820;
  int height = 520;
};

namespace detail {

inline std::string svg_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '&') out += "&amp;";
    else if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else out += c;
  }
  return out;
}

inline std::string coord(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

inline std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

// Tick positions in transformed (possibly log10) space, chosen at multiples of
// a 1/2/5 step.
inline std::vector<double> nice_ticks(double lo, double hi) {
  double span = hi - lo;
  if (!(span > 0.0)) return {lo};
  double raw = span / 5.0;
  double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  if (raw / mag >= 5.0) step = 5.0 * mag;
  else if (raw / mag >= 2.0) step = 2.0 * mag;
  std::vector<double> ticks;
  double t = std::ceil(lo / step) * step;
  for (; t <= hi + 1e-9 * span; t += step) ticks.push_back(t);
  return ticks;
}

}  // namespace detail

inline std::string render_plot(const std::vector<Series>& series, const PlotOptions& opt) {
  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                  "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};
  const double ml = 74, mr = 22, mt = 40, mb = 56;
  const double pw = opt.width - ml - mr, ph = opt.height - mt - mb;

  auto tx = [&](double v) { return opt.logx ? std::log10(v) : v; };
  auto ty = [&](double v) { return opt.logy ? std::log10(v) : v; };
  auto usable = [&](double x, double y) {
    if (!std::isfinite(x) || !std::isfinite(y)) return false;
    if (opt.logx && x <= 0.0) return false;
    if (opt.logy && y <= 0.0) return false;
    return true;
  };

  double xmin = 0, xmax = 0, ymin = 0, ymax = 0;
  bool any = false;
  for (const auto& s : series)
    for (auto [x, y] : s.points) {
      if (!usable(x, y)) continue;
      double a = tx(x), b = ty(y);
      if (!any) { xmin = xmax = a; ymin = ymax = b; any = true; }
      xmin = std::min(xmin, a); xmax = std::max(xmax, a);
      ymin = std::min(ymin, b); ymax = std::max(ymax, b);
    }
  require(any, Errc::no_data, "nothing to plot");
  if (xmax - xmin < 1e-12) { xmin -= 0.5; xmax += 0.5; }
  if (ymax - ymin < 1e-12) { ymin -= 0.5; ymax += 0.5; }
  double xpad = 0.04 * (xmax - xmin), ypad = 0.05 * (ymax - ymin);
  xmin -= xpad; xmax += xpad; ymin -= ypad; ymax += ypad;

  auto px = [&](double v) { return ml + (tx(v) - xmin) / (xmax - xmin) * pw; };
  auto py = [&](double v) { return mt + ph - (ty(v) - ymin) / (ymax - ymin) * ph; };

  std::string svg;
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%d\" height=\"%d\" "
                "viewBox=\"0 0 %d %d\" font-family=\"sans-serif\">\n",
                opt.width, opt.height, opt.width, opt.height);
  svg += buf;
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  std::vector<double> xticks = detail::nice_ticks(xmin, xmax);
  std::vector<double> yticks = detail::nice_ticks(ymin, ymax);
  for (double t : xticks) {
    double x = ml + (t - xmin) / (xmax - xmin) * pw;
    svg += "<line x1=\"" + detail::coord(x) + "\" y1=\"" + detail::coord(mt) + "\" x2=\"" +
           detail::coord(x) + "\" y2=\"" + detail::coord(mt + ph) +
           "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
    double shown = opt.logx ? std::pow(10.0, t) : t;
    svg += "<text x=\"" + detail::coord(x) + "\" y=\"" + detail::coord(mt + ph + 18) +
           "\" font-size=\"11\" text-anchor=\"middle\">" + detail::tick_label(shown) + "</text>\n";
  }
  for (double t : yticks) {
    double y = mt + ph - (t - ymin) / (ymax - ymin) * ph;
    svg += "<line x1=\"" + detail::coord(ml) + "\" y1=\"" + detail::coord(y) + "\" x2=\"" +
           detail::coord(ml + pw) + "\" y2=\"" + detail::coord(y) +
           "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
    double shown = opt.logy ? std::pow(10.0, t) : t;
    svg += "<text x=\"" + detail::coord(ml - 6) + "\" y=\"" + detail::coord(y + 4) +
           "\" font-size=\"11\" text-anchor=\"end\">" + detail::tick_label(shown) + "</text>\n";
  }
  svg += "<rect x=\"" + detail::coord(ml) + "\" y=\"" + detail::coord(mt) + "\" width=\"" +
         detail::coord(pw) + "\" height=\"" + detail::coord(ph) +
         "\" fill=\"none\" stroke=\"#333333\" stroke-width=\"1\"/>\n";

  for (std::size_t i = 0; i < series.size(); ++i) {
    const char* color = palette[i % (sizeof(palette) / sizeof(palette[0]))];
    const auto& s = series[i];
    if (s.draw_line) {
      std::string pts;
      for (auto [x, y] : s.points) {
        if (!usable(x, y)) continue;
        pts += detail::coord(px(x)) + "," + detail::coord(py(y)) + " ";
      }
      if (!pts.empty())
        svg += "<polyline fill=\"none\" stroke=\"" + std::string(color) +
               "\" stroke-width=\"1.8\" points=\"" + pts + "\"/>\n";
    }
    for (auto [x, y] : s.points) {
      if (!usable(x, y)) continue;
      svg += "<circle cx=\"" + detail::coord(px(x)) + "\" cy=\"" + detail::coord(py(y)) +
             "\" r=\"2.6\" fill=\"" + std::string(color) + "\"/>\n";
    }
  }

  double lx = ml + pw - 150, ly = mt + 12;
  for (std::size_t i = 0; i < series.size(); ++i) {
    const char* color = palette[i % (sizeof(palette) / sizeof(palette[0]))];
    double y = ly + 16.0 * static_cast<double>(i);
    svg += "<line x1=\"" + detail::coord(lx) + "\" y1=\"" + detail::coord(y) + "\" x2=\"" +
           detail::coord(lx + 22) + "\" y2=\"" + detail::coord(y) + "\" stroke=\"" +
           std::string(color) + "\" stroke-width=\"2.4\"/>\n";
    svg += "<text x=\"" + detail::coord(lx + 28) + "\" y=\"" + detail::coord(y + 4) +
           "\" font-size=\"12\">" + detail::svg_escape(series[i].label) + "</text>\n";
  }

  if (!opt.title.empty())
    svg += "<text x=\"" + detail::coord(ml + pw / 2) + "\" y=\"22\" font-size=\"15\" "
           "text-anchor=\"middle\">" + detail::svg_escape(opt.title) + "</text>\n";
  if (!opt.xlabel.empty())
    svg += "<text x=\"" + detail::coord(ml + pw / 2) + "\" y=\"" +
           detail::coord(mt + ph + 40) + "\" font-size=\"13\" text-anchor=\"middle\">" +
           detail::svg_escape(opt.xlabel) + "</text>\n";
  if (!opt.ylabel.empty())
    svg += "<text x=\"16\" y=\"" + detail::coord(mt + ph / 2) +
           "\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 16 " +
           detail::coord(mt + ph / 2) + ")\">" + detail::svg_escape(opt.ylabel) + "</text>\n";

  svg += "</svg>\n";
  return svg;
}

inline void save_svg(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  require(f.good(), Errc::no_data, "cannot open '" + path + "' for writing");
  f << content;
}

}  // namespace csar
