#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <unistd.h>

#include "criteria.hpp"
#include "fulllik_cli/cli.hpp"

namespace acceptance {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

struct Run {
  std::string name;
  std::string command;
  json overrides;
};

}  // namespace

Outcome cli_determinism() {
  const fs::path root = fs::temp_directory_path() / ("fulllik-determinism-" + std::to_string(::getpid()));
  fs::remove_all(root);
  const std::vector<Run> runs = {
      {"fit-default", "fit", json::object()},
      {"fit-multi-lasso", "fit",
       {{"prior", "laplace"}, {"prior_granularity", "multi"}, {"lr", 0.01}, {"steps", 500}, {"seed", 3}}},
      {"fit-data-sigma", "fit",
       {{"data", "gen:outlier_regression"}, {"provider", "data"}, {"transductive", true}, {"steps", 500}}},
      {"fit-predicted-mlp", "fit",
       {{"data", "gen:heteroskedastic"}, {"model", "mlp"}, {"provider", "predicted"}, {"head", "mlp"},
        {"head_input", "representation"}, {"batch_size", 64}, {"steps", 400}}},
      {"fit-softmax-tau", "fit",
       {{"data", "gen:outlier_classification"}, {"likelihood", "softmax"}, {"provider", "predicted"},
        {"isolated", true}, {"lr", 0.01}, {"steps", 400}, {"seed", 7}}},
      {"fit-robust", "fit", {{"data", "gen:outlier_regression"}, {"likelihood", "robust"}, {"steps", 400}}},
      {"fit-autoencoder", "fit",
       {{"data", "gen:contaminated_gaussian"}, {"model", "autoencoder"}, {"hidden", json::array({8})},
        {"dropout", 0.1}, {"steps", 300}}},
      {"bench-reg", "bench-reg", {{"threads", 4}, {"sparsities", json::array({0.05, 0.2})}, {"steps", 1000}}},
      {"outliers", "outliers",
       {{"threads", 4}, {"detectors", json::array({"pca_s", "ae_s", "pca_baseline", "ae_baseline"})},
        {"steps", 500}}},
      {"recalibrate", "recalibrate", {{"steps", 500}}},
      {"recalibrate-regression", "recalibrate",
       {{"data", "gen:heteroskedastic?n=1000"}, {"train_rows", 300}, {"validation_rows", 300}, {"steps", 500}}},
      {"plot", "plot",
       {{"input", (root / "bench-reg" / "a" / "lambda_sweep.csv").string()}, {"log_x", true}, {"log_y", true}}},
      {"plot-series", "plot",
       {{"input", (root / "recalibrate" / "a" / "reliability.csv").string()}, {"x", "confidence"},
        {"y", json::array({"accuracy"})}, {"series", "method"}, {"title", "reliability"}}},
  };

  std::size_t files = 0;
  std::vector<std::string> failures;
  for (const auto& run : runs) {
    const fs::path a = root / run.name / "a", b = root / run.name / "b";
    try {
      const auto written = fulllik::cli::run_command(run.command, fulllik::cli::resolve_config(run.command, run.overrides), a);
      const auto replayed = fulllik::cli::replay(a / "manifest.json", b);
      if (written != replayed) failures.push_back(run.name + ": artifact lists differ");
      for (const auto& name : written) {
        ++files;
        if (slurp(a / name) != slurp(b / name)) failures.push_back(run.name + "/" + name);
      }
    } catch (const std::exception& e) {
      failures.push_back(run.name + ": " + e.what());
    }
  }
  fs::remove_all(root);

  std::ostringstream detail;
  detail << runs.size() << " runs, " << files << " artifacts compared";
  if (!failures.empty()) {
    detail << "; differing:";
    for (const auto& f : failures) detail << " " << f;
  }
  return {failures.empty(), detail.str()};
}

}  // namespace acceptance
