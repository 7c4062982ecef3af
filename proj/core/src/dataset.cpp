#include "fulllik/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "fulllik/errors.hpp"
#include "fulllik/rng.hpp"

namespace fulllik {
namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    if (pos == std::string::npos) {
      cells.push_back(trim(std::string_view(line).substr(start)));
      break;
    }
    cells.push_back(trim(std::string_view(line).substr(start, pos - start)));
    start = pos + 1;
  }
  return cells;
}

double parse_cell(const std::string& cell, std::size_t row, std::size_t col) {
  if (cell.empty()) return std::numeric_limits<double>::quiet_NaN();
  double v = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  if (*first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || !std::isfinite(v))
    throw ParseError("unparseable cell '" + cell + "'", row, col);
  return v;
}

}  // namespace

int Dataset::num_classes() const {
  if (labels.empty()) return 0;
  return *std::max_element(labels.begin(), labels.end()) + 1;
}

Dataset Dataset::subset(std::span<const std::size_t> rows_to_keep) const {
  Dataset out;
  out.target_kind = target_kind;
  out.column_names = column_names;
  out.target_name = target_name;
  out.standardization = standardization;
  out.features.resize(static_cast<Eigen::Index>(rows_to_keep.size()), features.cols());
  for (std::size_t i = 0; i < rows_to_keep.size(); ++i) {
    const auto r = rows_to_keep[i];
    if (r >= rows()) throw InvalidArgument("subset row out of range");
    out.features.row(static_cast<Eigen::Index>(i)) = features.row(static_cast<Eigen::Index>(r));
    if (!targets.empty()) out.targets.push_back(targets[r]);
    if (!labels.empty()) out.labels.push_back(labels[r]);
    if (!outlier_flags.empty()) out.outlier_flags.push_back(outlier_flags[r]);
    out.row_ids.push_back(row_ids.empty() ? r : row_ids[r]);
  }
  return out;
}

Matrix Dataset::target_matrix() const {
  Matrix t(static_cast<Eigen::Index>(targets.size()), 1);
  for (std::size_t i = 0; i < targets.size(); ++i) t(static_cast<Eigen::Index>(i), 0) = targets[i];
  return t;
}

std::size_t CsvTable::column(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw SchemaError("missing column '" + name + "'");
  return static_cast<std::size_t>(it - header.begin());
}

CsvTable read_csv_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open '" + path + "'");
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) throw SchemaError("'" + path + "' has no header row");
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line = line.substr(3);
  table.header = split_line(line);
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    auto cells = split_line(line);
    if (cells.size() != table.header.size())
      throw ParseError("expected " + std::to_string(table.header.size()) + " cells, got " +
                           std::to_string(cells.size()),
                       row, cells.size());
    std::vector<double> values(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) values[c] = parse_cell(cells[c], row, c);
    table.rows.push_back(std::move(values));
  }
  return table;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

void write_csv_table(const std::string& path, const CsvTable& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot write '" + path + "'");
  for (std::size_t c = 0; c < table.header.size(); ++c)
    out << (c ? "," : "") << table.header[c];
  out << '\n';
  for (const auto& r : table.rows) {
    for (std::size_t c = 0; c < r.size(); ++c) {
      out << (c ? "," : "");
      if (!std::isnan(r[c])) out << format_double(r[c]);
    }
    out << '\n';
  }
}

Dataset load_csv(const std::string& path, const std::optional<std::string>& target_column,
                 TargetKind kind) {
  const CsvTable table = read_csv_table(path);
  std::optional<std::size_t> target_col;
  if (target_column) target_col = table.column(*target_column);
  if (target_col && kind == TargetKind::none)
    throw InvalidArgument("a target column needs a target kind");

  Dataset ds;
  ds.target_kind = target_col ? kind : TargetKind::none;
  for (std::size_t c = 0; c < table.header.size(); ++c)
    if (!target_col || c != *target_col) ds.column_names.push_back(table.header[c]);
  if (target_col) ds.target_name = table.header[*target_col];

  const auto n = table.rows.size();
  const auto d = ds.column_names.size();
  ds.features.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  std::vector<double> sums(d, 0.0);
  std::vector<std::size_t> counts(d, 0);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t f = 0;
    for (std::size_t c = 0; c < table.header.size(); ++c) {
      const double v = table.rows[i][c];
      if (target_col && c == *target_col) {
        if (std::isnan(v)) throw ParseError("missing target", i + 1, c);
        if (kind == TargetKind::classes) {
          if (v < 0 || v != std::floor(v)) throw ParseError("class label must be a non-negative integer", i + 1, c);
          ds.labels.push_back(static_cast<int>(v));
        } else {
          ds.targets.push_back(v);
        }
        continue;
      }
      ds.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(f)) = v;
      if (!std::isnan(v)) {
        sums[f] += v;
        ++counts[f];
      }
      ++f;
    }
    ds.row_ids.push_back(i);
  }
  // Mean imputation.
  for (std::size_t f = 0; f < d; ++f) {
    const double mean = counts[f] ? sums[f] / static_cast<double>(counts[f]) : 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double& v = ds.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(f));
      if (std::isnan(v)) v = mean;
    }
  }
  return ds;
}

void write_csv(const std::string& path, const Dataset& ds) {
  CsvTable table;
  table.header = ds.column_names;
  if (table.header.size() != ds.cols()) {
    table.header.clear();
    for (std::size_t c = 0; c < ds.cols(); ++c) table.header.push_back("x" + std::to_string(c));
  }
  const bool has_target = ds.target_kind != TargetKind::none;
  if (has_target) table.header.push_back(ds.target_name.empty() ? "y" : ds.target_name);
  for (std::size_t i = 0; i < ds.rows(); ++i) {
    std::vector<double> r(ds.cols());
    for (std::size_t c = 0; c < ds.cols(); ++c)
      r[c] = ds.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c));
    if (ds.target_kind == TargetKind::real) r.push_back(ds.targets[i]);
    if (ds.target_kind == TargetKind::classes) r.push_back(ds.labels[i]);
    table.rows.push_back(std::move(r));
  }
  write_csv_table(path, table);
}

Dataset apply_standardization(const Dataset& ds, const Standardization& stats) {
  if (stats.mean.size() != ds.cols()) throw InvalidArgument("standardization width mismatch");
  Dataset out = ds;
  for (std::size_t c = 0; c < ds.cols(); ++c) {
    auto col = out.features.col(static_cast<Eigen::Index>(c));
    col = (col.array() - stats.mean[c]) / stats.scale[c];
  }
  if (stats.target_mean && ds.target_kind == TargetKind::real)
    for (double& t : out.targets) t = (t - *stats.target_mean) / *stats.target_scale;
  out.standardization = stats;
  return out;
}

Dataset standardize(const Dataset& ds, std::span<const std::size_t> fit_rows, bool include_target) {
  std::vector<std::size_t> all;
  if (fit_rows.empty()) {
    all.resize(ds.rows());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    fit_rows = all;
  }
  if (fit_rows.empty()) throw InvalidArgument("standardize needs a nonempty fit split");

  const auto moments = [&](auto value_of) {
    double mean = 0.0;
    for (auto r : fit_rows) mean += value_of(r);
    mean /= static_cast<double>(fit_rows.size());
    double var = 0.0;
    for (auto r : fit_rows) {
      const double dlt = value_of(r) - mean;
      var += dlt * dlt;
    }
    var /= static_cast<double>(fit_rows.size());
    return std::pair{mean, std::sqrt(var)};
  };

  Standardization stats;
  for (std::size_t c = 0; c < ds.cols(); ++c) {
    auto [mean, sd] = moments([&](std::size_t r) {
      return ds.features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    });
    if (!(sd > 1e-12)) {
      const auto name = c < ds.column_names.size() ? ds.column_names[c] : std::to_string(c);
      stats.warnings.push_back("constant column '" + name + "': scale clamped to 1");
      sd = 1.0;
    }
    stats.mean.push_back(mean);
    stats.scale.push_back(sd);
  }
  if (include_target && ds.target_kind == TargetKind::real) {
    auto [mean, sd] = moments([&](std::size_t r) { return ds.targets[r]; });
    if (!(sd > 1e-12)) {
      stats.warnings.push_back("constant target: scale clamped to 1");
      sd = 1.0;
    }
    stats.target_mean = mean;
    stats.target_scale = sd;
  }
  return apply_standardization(ds, stats);
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> train_test_split(
    std::size_t n, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction >= 0.0 && test_fraction < 1.0))
    throw InvalidArgument("test fraction must lie in [0, 1)");
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  Rng rng(seed, "split");
  for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
  const auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(n)));
  std::vector<std::size_t> test(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_test));
  std::vector<std::size_t> train(perm.begin() + static_cast<std::ptrdiff_t>(n_test), perm.end());
  std::sort(test.begin(), test.end());
  std::sort(train.begin(), train.end());
  return {train, test};
}

}  // namespace fulllik
