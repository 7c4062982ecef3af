#include "svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace fulllik::cli {
namespace {

constexpr double kWidth = 640, kHeight = 420;
constexpr double kLeft = 70, kRight = 160, kTop = 40, kBottom = 50;
const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
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

struct Axis {
  bool log = false;
  double lo = 0.0, hi = 1.0;  // in transformed units

  double transform(double v) const { return log ? std::log10(v) : v; }
  bool placeable(double v) const { return std::isfinite(v) && (!log || v > 0.0); }

  void fit(const std::vector<double>& values) {
    double a = std::numeric_limits<double>::infinity(), b = -a;
    for (double v : values) {
      a = std::min(a, transform(v));
      b = std::max(b, transform(v));
    }
    if (!std::isfinite(a)) {
      a = 0.0;
      b = 1.0;
    }
    if (b - a < 1e-12) {
      a -= 0.5;
      b += 0.5;
    }
    if (log) {
      a = std::floor(a);
      b = std::ceil(b);
    }
    lo = a;
    hi = b;
  }

  std::vector<double> ticks() const {  // in data units
    std::vector<double> t;
    if (log) {
      const int step = std::max(1, static_cast<int>(std::ceil((hi - lo) / 8.0)));
      for (int e = static_cast<int>(lo); e <= static_cast<int>(hi); e += step) t.push_back(std::pow(10.0, e));
      return t;
    }
    const double raw = (hi - lo) / 5.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double m : {1.0, 2.0, 5.0, 10.0})
      if (m * mag >= raw) {
        step = m * mag;
        break;
      }
    for (double v = std::ceil(lo / step) * step; v <= hi + 1e-9 * step; v += step)
      t.push_back(std::abs(v) < 1e-12 * step ? 0.0 : v);
    return t;
  }
};

}  // namespace

std::string render_svg(const Chart& chart) {
  Axis ax, ay;
  ax.log = chart.log_x;
  ay.log = chart.log_y;
  std::vector<double> xs, ys;
  for (const auto& s : chart.series)
    for (const auto& [x, y] : s.points)
      if (ax.placeable(x) && ay.placeable(y)) {
        xs.push_back(x);
        ys.push_back(y);
      }
  ax.fit(xs);
  ay.fit(ys);

  const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
  auto px = [&](double x) { return kLeft + (ax.transform(x) - ax.lo) / (ax.hi - ax.lo) * pw; };
  auto py = [&](double y) { return kTop + ph - (ay.transform(y) - ay.lo) / (ay.hi - ay.lo) * ph; };

  std::string s;
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(kWidth) + "\" height=\"" + fmt(kHeight) +
       "\" viewBox=\"0 0 " + fmt(kWidth) + " " + fmt(kHeight) + "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!chart.title.empty())
    s += "<text x=\"" + fmt(kLeft + pw / 2) + "\" y=\"" + fmt(kTop / 2 + 4) +
         "\" text-anchor=\"middle\" font-size=\"14\">" + escape(chart.title) + "</text>\n";
  s += "<rect x=\"" + fmt(kLeft) + "\" y=\"" + fmt(kTop) + "\" width=\"" + fmt(pw) + "\" height=\"" + fmt(ph) +
       "\" fill=\"none\" stroke=\"black\"/>\n";
  for (double t : ax.ticks()) {
    const double x = px(t);
    s += "<line x1=\"" + fmt(x) + "\" y1=\"" + fmt(kTop + ph) + "\" x2=\"" + fmt(x) + "\" y2=\"" + fmt(kTop + ph + 5) +
         "\" stroke=\"black\"/>\n";
    s += "<text x=\"" + fmt(x) + "\" y=\"" + fmt(kTop + ph + 18) + "\" text-anchor=\"middle\">" + label(t) + "</text>\n";
  }
  for (double t : ay.ticks()) {
    const double y = py(t);
    s += "<line x1=\"" + fmt(kLeft - 5) + "\" y1=\"" + fmt(y) + "\" x2=\"" + fmt(kLeft) + "\" y2=\"" + fmt(y) +
         "\" stroke=\"black\"/>\n";
    s += "<text x=\"" + fmt(kLeft - 8) + "\" y=\"" + fmt(y + 4) + "\" text-anchor=\"end\">" + label(t) + "</text>\n";
  }
  if (!chart.x_label.empty())
    s += "<text x=\"" + fmt(kLeft + pw / 2) + "\" y=\"" + fmt(kHeight - 10) + "\" text-anchor=\"middle\">" +
         escape(chart.x_label) + "</text>\n";
  if (!chart.y_label.empty())
    s += "<text x=\"15\" y=\"" + fmt(kTop + ph / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 15 " +
         fmt(kTop + ph / 2) + ")\">" + escape(chart.y_label) + "</text>\n";

  for (std::size_t k = 0; k < chart.series.size(); ++k) {
    const auto& ser = chart.series[k];
    const std::string color = kPalette[k % std::size(kPalette)];
    std::string pts;
    for (const auto& [x, y] : ser.points) {
      if (!ax.placeable(x) || !ay.placeable(y)) continue;
      if (ser.markers) {
        s += "<circle cx=\"" + fmt(px(x)) + "\" cy=\"" + fmt(py(y)) + "\" r=\"4\" fill=\"" + color + "\"/>\n";
      } else {
        pts += (pts.empty() ? "" : " ") + fmt(px(x)) + "," + fmt(py(y));
      }
    }
    if (!pts.empty())
      s += "<polyline fill=\"none\" stroke=\"" + color + "\" stroke-width=\"1.5\" points=\"" + pts + "\"/>\n";
    const double ly = kTop + 12 + 16 * static_cast<double>(k);
    s += "<rect x=\"" + fmt(kWidth - kRight + 12) + "\" y=\"" + fmt(ly - 8) + "\" width=\"10\" height=\"10\" fill=\"" +
         color + "\"/>\n";
    s += "<text x=\"" + fmt(kWidth - kRight + 28) + "\" y=\"" + fmt(ly + 1) + "\">" + escape(ser.name) + "</text>\n";
  }
  s += "</svg>\n";
  return s;
}

}  // namespace fulllik::cli
