#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fulllik/dataset.hpp"
#include "fulllik/fit.hpp"
#include "fulllik_cli/cli.hpp"

namespace fulllik::cli {

using nlohmann::json;

/// Where a command writes and what it has written so far.
struct RunContext {
  json config;
  std::filesystem::path out;
  std::vector<std::string> artifacts;

  std::uint64_t seed() const { return config.at("seed").get<std::uint64_t>(); }
  std::size_t threads() const { return config.at("threads").get<std::size_t>(); }
  /// Absolute path for an artifact, recording its relative name.
  std::filesystem::path artifact(const std::string& name);
  void write_json(const std::string& name, const json& doc);
  void write_text(const std::string& name, const std::string& text);
};

void cmd_fit(RunContext& ctx);
void cmd_bench_reg(RunContext& ctx);
void cmd_outliers(RunContext& ctx);
void cmd_recalibrate(RunContext& ctx);
void cmd_plot(RunContext& ctx);

/// A loaded data source: generated (`gen:<name>?k=v&...`) or a CSV path.
struct DataSource {
  Dataset data;
  std::vector<double> true_weights;
  bool generated = false;
  std::string generator;
};

/// `target` names the CSV target column (empty = no target); `target_kind`
/// is "real" or "classes".
DataSource load_data(const std::string& spec, std::uint64_t seed, const std::string& target = "",
                     const std::string& target_kind = "real");

/// Sorted-key JSON with two-space indentation and a trailing newline.
std::string dump(const json& doc);
/// Finite doubles as numbers, NaN/inf as null.
json number(double v);

json fit_report_json(const FitReport& report);

/// Runs fn(i) for i in [0, n) on up to `threads` workers. Results must be
/// written to index-addressed slots so ordering does not depend on timing.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn);

/// Minimal CSV with string cells (for inputs that mix labels and numbers).
struct TextTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const;
  std::string to_csv() const;
};
TextTable read_text_table(const std::filesystem::path& path);

}  // namespace fulllik::cli
