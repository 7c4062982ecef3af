#include <numeric>
#include <utility>

#include "fulllik/errors.hpp"
#include "fulllik/metrics.hpp"
#include "fulllik/recalibrate.hpp"
#include "fulllik/rng.hpp"
#include "internal.hpp"

namespace fulllik::cli {

void cmd_recalibrate(RunContext& ctx) {
  const json& c = ctx.config;
  const auto seed = ctx.seed();
  auto src = load_data(c["data"], seed, c["target"], c["target_kind"]);
  const Dataset& raw = src.data;
  if (raw.target_kind == TargetKind::none) throw InvalidArgument("recalibration needs a target (--target)");
  const bool classification = raw.target_kind == TargetKind::classes;
  const std::size_t n = raw.rows(), n_train = c["train_rows"], n_val = c["validation_rows"];
  if (n_train == 0 || n_val == 0 || n_train + n_val >= n)
    throw InvalidArgument("train and validation rows must leave at least one test row");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed, "cli/recalibrate/split");
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  const std::vector<std::size_t> train_rows(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  const std::vector<std::size_t> val_rows(order.begin() + static_cast<std::ptrdiff_t>(n_train),
                                          order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
  const std::vector<std::size_t> test_rows(order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), order.end());
  const Dataset all = standardize(raw, train_rows);
  const Dataset train = all.subset(train_rows), val = all.subset(val_rows), test = all.subset(test_rows);

  const std::size_t out = classification ? static_cast<std::size_t>(all.num_classes()) : 1;
  Model model(Architecture::mlp(all.cols(), {c["hidden"].get<std::size_t>()}, out), InitScheme::he, seed);
  auto lik = LikelihoodSpec::make(classification ? Family::softmax : Family::normal);
  if (!classification) lik.slot("sigma").make_global(1.0);
  FitConfig base;
  base.optimizer.lr = c["base_lr"];
  base.steps = c["base_steps"];
  base.seed = seed;
  base.trajectory_stride = base.steps;
  const auto base_report = fit(model, lik, train, base);
  const double base_sigma = classification ? 0.0 : base_report.slots.front().mean;

  auto inputs = [&](const Dataset& ds, const char* split) {
    CalibrationInput in;
    Model::Cache cache;
    in.outputs = model.forward(ds.features, &cache);
    in.features = Model::representation(cache);
    in.split = split;
    if (classification) {
      in.labels = ds.labels;
    } else {
      in.targets = ds.targets;
      in.base_sigma.assign(ds.rows(), base_sigma);
    }
    return in;
  };
  const auto v = inputs(val, "validation");
  const auto t = inputs(test, "test");

  auto cfg = RecalConfig::defaults();
  cfg.fit.steps = c["steps"];
  cfg.fit.optimizer.lr = c["lr"];
  cfg.fit.seed = seed;
  cfg.ece_bins = c["bins"];
  cfg.cal_levels = c["levels"];
  const auto table = compare_methods(v, t, cfg);

  std::string csv = "method,metric,value,mean_parameter,error\n";
  json rows = json::array();
  for (const auto& r : table.rows) {
    csv += r.method + "," + table.metric + "," + (r.value ? format_double(*r.value) : "") + "," +
           (r.mean_parameter ? format_double(*r.mean_parameter) : "") + "," + r.error + "\n";
    rows.push_back({{"method", r.method},
                    {"value", r.value ? number(*r.value) : json(nullptr)},
                    {"mean_parameter", r.mean_parameter ? number(*r.mean_parameter) : json(nullptr)},
                    {"error", r.error}});
  }
  ctx.write_text("calibration.csv", csv);

  // Reliability data for the uncalibrated model and global scaling.
  const auto gs = Recalibrator::fit(RecalKind::global_scaling, v, cfg);
  std::string rel;
  if (classification) {
    rel = "method,lower,upper,count,confidence,accuracy\n";
    for (const auto& [name, probs] : {std::pair<std::string, Matrix>{"uncalibrated", uncalibrated_probabilities(t)},
                                      std::pair<std::string, Matrix>{"GS", gs.probabilities(t)}})
      for (const auto& b : ece_report(probs, t.labels, cfg.ece_bins).bins)
        rel += name + "," + format_double(b.lower) + "," + format_double(b.upper) + "," + std::to_string(b.count) +
               "," + format_double(b.confidence) + "," + format_double(b.accuracy) + "\n";
  } else {
    rel = "method,expected,observed\n";
    for (const auto& [name, pit] : {std::pair<std::string, std::vector<double>>{"uncalibrated", uncalibrated_pit(t)},
                                    std::pair<std::string, std::vector<double>>{"GS", gs.pit(t)}})
      for (const auto& [p, phat] : calibration_curve_from_pit(pit, cfg.cal_levels))
        rel += name + "," + format_double(p) + "," + format_double(phat) + "\n";
  }
  ctx.write_text("reliability.csv", rel);

  json doc;
  doc["schema"] = kReportSchema;
  doc["command"] = "recalibrate";
  doc["task"] = classification ? "classification" : "regression";
  doc["splits"] = {{"train", train.rows()}, {"validation", val.rows()}, {"test", test.rows()}};
  doc["base"] = fit_report_json(base_report);
  if (classification) doc["base_test_accuracy"] = number(accuracy(t.outputs, t.labels));
  doc["metric"] = table.metric;
  doc["methods"] = rows;
  ctx.write_json("report.json", doc);
}

}  // namespace fulllik::cli
