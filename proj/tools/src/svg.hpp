#pragma once

#include <string>
#include <utility>
#include <vector>

namespace fulllik::cli {

struct Series {
  std::string name;
  std::vector<std::pair<double, double>> points;
  bool markers = false;  // draw points instead of a polyline
};

struct Chart {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_x = false;
  bool log_y = false;
  std::vector<Series> series;
};

/// Self-contained SVG line chart. Coordinates use fixed two-decimal
/// formatting so identical input renders identical bytes. Points that cannot
/// be placed (non-finite, or non-positive on a log axis) are skipped.
std::string render_svg(const Chart& chart);

}  // namespace fulllik::cli
