// Copyright 2026 The shiftlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "shiftlab/analysis/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace shiftlab::analysis {

namespace {

constexpr double kWidth = 720;
constexpr double kHeight = 420;
constexpr double kLeft = 70;
constexpr double kRight = 170;
constexpr double kTop = 40;
constexpr double kBottom = 55;
constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", std::abs(v) < 1e-12 ? 0.0 : v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

double nice_step(double span) {
  const double raw = span / 6;
  const double mag = std::pow(10, std::floor(std::log10(raw)));
  for (double m : {1.0, 2.0, 2.5, 5.0, 10.0}) {
    if (m * mag >= raw) return m * mag;
  }
  return 10 * mag;
}

struct Frame {
  double x0, x1, y0, y1;
  double px(double x) const { return kLeft + (x - x0) / (x1 - x0) * (kWidth - kLeft - kRight); }
  double py(double y) const { return kHeight - kBottom - (y - y0) / (y1 - y0) * (kHeight - kTop - kBottom); }
};

std::string open_svg(const Axes& axes) {
  std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kWidth) + "\" height=\"" +
                  num(kHeight) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s += "<text x=\"" + num(kWidth / 2) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" + escape(axes.title) +
       "</text>\n";
  s += "<text x=\"" + num(kLeft + (kWidth - kLeft - kRight) / 2) + "\" y=\"" + num(kHeight - 12) +
       "\" text-anchor=\"middle\">" + escape(axes.x_label) + "</text>\n";
  s += "<text transform=\"translate(16," + num(kTop + (kHeight - kTop - kBottom) / 2) +
       ") rotate(-90)\" text-anchor=\"middle\">" + escape(axes.y_label) + "</text>\n";
  return s;
}

std::string y_axis(const Frame& f) {
  std::string s;
  const double step = nice_step(f.y1 - f.y0);
  for (double v = std::ceil(f.y0 / step) * step; v <= f.y1 + 1e-9; v += step) {
    s += "<line x1=\"" + num(kLeft) + "\" x2=\"" + num(kWidth - kRight) + "\" y1=\"" + num(f.py(v)) + "\" y2=\"" +
         num(f.py(v)) + "\" stroke=\"#e0e0e0\"/>\n";
    s += "<text x=\"" + num(kLeft - 6) + "\" y=\"" + num(f.py(v) + 4) + "\" text-anchor=\"end\">" + tick(v) +
         "</text>\n";
  }
  s += "<line x1=\"" + num(kLeft) + "\" x2=\"" + num(kLeft) + "\" y1=\"" + num(kTop) + "\" y2=\"" +
       num(kHeight - kBottom) + "\" stroke=\"black\"/>\n";
  s += "<line x1=\"" + num(kLeft) + "\" x2=\"" + num(kWidth - kRight) + "\" y1=\"" + num(kHeight - kBottom) +
       "\" y2=\"" + num(kHeight - kBottom) + "\" stroke=\"black\"/>\n";
  return s;
}

std::string legend(const std::vector<std::string>& names) {
  std::string s;
  for (size_t i = 0; i < names.size(); ++i) {
    const double y = kTop + 10 + 18.0 * static_cast<double>(i);
    const char* color = kPalette[i % std::size(kPalette)];
    s += "<rect x=\"" + num(kWidth - kRight + 14) + "\" y=\"" + num(y - 9) + "\" width=\"12\" height=\"12\" fill=\"" +
         color + "\"/>\n";
    s += "<text x=\"" + num(kWidth - kRight + 32) + "\" y=\"" + num(y + 1) + "\">" + escape(names[i]) + "</text>\n";
  }
  return s;
}

void y_range(const Axes& axes, double lo, double hi, double& y0, double& y1) {
  y0 = axes.y_min.value_or(lo);
  y1 = axes.y_max.value_or(hi);
  if (!(y1 > y0)) {
    y0 -= 0.5;
    y1 += 0.5;
  }
}

}  // namespace

std::string svg_line_chart(const Axes& axes, const std::vector<Series>& series) {
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, lo = x0, hi = -x0;
  for (const auto& s : series) {
    for (double v : s.x) x0 = std::min(x0, v), x1 = std::max(x1, v);
    for (double v : s.y) lo = std::min(lo, v), hi = std::max(hi, v);
  }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, lo = 0, hi = 1;
  if (!(x1 > x0)) x0 -= 1, x1 += 1;
  Frame f{x0, x1, 0, 1};
  y_range(axes, lo, hi, f.y0, f.y1);

  std::string s = open_svg(axes) + y_axis(f);
  const double xstep = nice_step(x1 - x0);
  for (double v = std::ceil(x0 / xstep) * xstep; v <= x1 + 1e-9; v += xstep) {
    s += "<text x=\"" + num(f.px(v)) + "\" y=\"" + num(kHeight - kBottom + 16) + "\" text-anchor=\"middle\">" +
         tick(v) + "</text>\n";
  }
  std::vector<std::string> names;
  for (size_t i = 0; i < series.size(); ++i) {
    const auto& ser = series[i];
    names.push_back(ser.name);
    std::string pts;
    for (size_t k = 0; k < ser.x.size() && k < ser.y.size(); ++k) {
      pts += (k ? " " : "") + num(f.px(ser.x[k])) + "," + num(f.py(ser.y[k]));
    }
    s += "<polyline fill=\"none\" stroke-width=\"1.8\" stroke=\"" + std::string(kPalette[i % std::size(kPalette)]) +
         "\" points=\"" + pts + "\"/>\n";
  }
  s += legend(names) + "</svg>\n";
  return s;
}

std::string svg_bar_chart(const Axes& axes, const std::vector<std::string>& categories,
                          const std::vector<BarGroup>& groups) {
  double lo = 0, hi = 0;
  for (const auto& g : groups) {
    for (const auto& v : g.values) {
      if (v) lo = std::min(lo, *v), hi = std::max(hi, *v);
    }
  }
  Frame f{0, static_cast<double>(std::max<size_t>(categories.size(), 1)), 0, 1};
  y_range(axes, lo, hi == lo ? lo + 1 : hi, f.y0, f.y1);

  std::string s = open_svg(axes) + y_axis(f);
  const double slot = f.px(1) - f.px(0);
  const double bar = slot * 0.8 / static_cast<double>(std::max<size_t>(groups.size(), 1));
  std::vector<std::string> names;
  for (size_t c = 0; c < categories.size(); ++c) {
    s += "<text x=\"" + num(f.px(static_cast<double>(c) + 0.5)) + "\" y=\"" + num(kHeight - kBottom + 16) +
         "\" text-anchor=\"middle\">" + escape(categories[c]) + "</text>\n";
  }
  for (size_t g = 0; g < groups.size(); ++g) {
    names.push_back(groups[g].name);
    for (size_t c = 0; c < categories.size() && c < groups[g].values.size(); ++c) {
      const double x = f.px(static_cast<double>(c)) + slot * 0.1 + bar * static_cast<double>(g);
      const auto& v = groups[g].values[c];
      if (!v) {
        s += "<text x=\"" + num(x + bar / 2) + "\" y=\"" + num(f.py(std::max(f.y0, 0.0)) - 4) +
             "\" text-anchor=\"middle\" font-size=\"9\">NONE</text>\n";
        continue;
      }
      const double base = std::clamp(0.0, f.y0, f.y1);
      const double top = std::clamp(*v, f.y0, f.y1);
      s += "<rect x=\"" + num(x) + "\" y=\"" + num(std::min(f.py(top), f.py(base))) + "\" width=\"" + num(bar) +
           "\" height=\"" + num(std::abs(f.py(top) - f.py(base))) + "\" fill=\"" + kPalette[g % std::size(kPalette)] +
           "\"/>\n";
    }
  }
  s += legend(names) + "</svg>\n";
  return s;
}

}  // namespace shiftlab::analysis
