#include <charconv>
#include <cmath>
#include <limits>
#include <map>

#include "fulllik/errors.hpp"
#include "internal.hpp"
#include "svg.hpp"

namespace fulllik::cli {
namespace {

double parse_cell(const std::string& s) {
  double v = std::numeric_limits<double>::quiet_NaN();
  const auto* end = s.data() + s.size();
  const auto r = std::from_chars(s.data(), end, v);
  if (r.ec != std::errc() || r.ptr != end) return std::numeric_limits<double>::quiet_NaN();
  return v;
}

}  // namespace

void cmd_plot(RunContext& ctx) {
  const json& c = ctx.config;
  const std::filesystem::path input = c["input"].get<std::string>();
  if (input.empty()) throw InvalidArgument("plot needs --input");
  const auto table = read_text_table(input);
  if (table.header.empty()) throw InvalidArgument("input has no columns");

  const std::string x_name = c["x"].get<std::string>().empty() ? table.header.front() : c["x"].get<std::string>();
  const std::string series_name = c["series"];
  const std::size_t x_col = table.column(x_name);
  const std::size_t s_col = series_name.empty() ? table.header.size() : table.column(series_name);

  std::vector<std::string> ys = c["y"];
  if (ys.empty())
    for (std::size_t k = 0; k < table.header.size(); ++k)
      if (k != x_col && k != s_col) ys.push_back(table.header[k]);
  if (ys.empty()) throw InvalidArgument("no y columns to plot");

  Chart chart;
  chart.title = c["title"];
  chart.x_label = x_name;
  chart.y_label = ys.size() == 1 ? ys.front() : "";
  chart.log_x = c["log_x"];
  chart.log_y = c["log_y"];

  // Series keep first-appearance order.
  std::map<std::string, std::size_t> index;
  for (const auto& y : ys) {
    const std::size_t y_col = table.column(y);
    for (const auto& row : table.rows) {
      std::string name = y;
      if (s_col < table.header.size()) name = ys.size() == 1 ? row[s_col] : row[s_col] + "/" + y;
      auto [it, fresh] = index.try_emplace(name, chart.series.size());
      if (fresh) chart.series.push_back({name, {}, false});
      chart.series[it->second].points.emplace_back(parse_cell(row[x_col]), parse_cell(row[y_col]));
    }
  }

  std::string name = c["name"];
  if (name.empty()) name = input.stem().string() + ".svg";
  if (std::filesystem::path(name).has_parent_path()) throw InvalidArgument("--name must be a bare file name");
  ctx.write_text(name, render_svg(chart));
}

}  // namespace fulllik::cli
