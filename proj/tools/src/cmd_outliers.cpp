#include "fulllik/errors.hpp"
#include "fulllik/metrics.hpp"
#include "fulllik/outliers.hpp"
#include "internal.hpp"

namespace fulllik::cli {

void cmd_outliers(RunContext& ctx) {
  const json& c = ctx.config;
  const auto seed = ctx.seed();
  const std::string label_column = c["label_column"];
  auto src = load_data(c["data"], seed, label_column, "classes");
  Dataset ds = std::move(src.data);
  std::vector<int> labels;
  if (src.generated ? !ds.outlier_flags.empty() : !label_column.empty())
    labels = src.generated ? ds.outlier_flags : ds.labels;
  for (int l : labels)
    if (l != 0 && l != 1) throw InvalidArgument("outlier labels must be 0 or 1");
  ds.target_kind = TargetKind::none;
  ds.labels.clear();
  if (c["standardize"].get<bool>()) ds = standardize(ds);

  std::vector<DetectorKind> kinds;
  for (const auto& s : c["detectors"]) kinds.push_back(parse_detector(s.get<std::string>()));
  if (kinds.empty()) throw InvalidArgument("no detectors requested");

  std::vector<OutlierScores> results(kinds.size());
  parallel_for(kinds.size(), ctx.threads(), [&](std::size_t k) {
    auto spec = DetectorSpec::defaults(kinds[k], ds.cols());
    if (c["code"].get<std::size_t>() > 0) spec.code = c["code"];
    if (c["steps"].get<std::size_t>() > 0) spec.fit.steps = c["steps"];
    if (!c["lr"].is_null()) spec.fit.optimizer.lr = c["lr"];
    if (!c["data_lr"].is_null()) spec.fit.data_lr = c["data_lr"].get<double>();
    spec.svd_warm_start = c["svd_warm_start"].get<bool>();
    spec.fit.seed = seed;
    results[k] = detect(spec, ds);
  });

  std::string csv = "row";
  if (!labels.empty()) csv += ",label";
  for (auto k : kinds) csv += std::string(",") + to_string(k);
  csv += "\n";
  for (std::size_t i = 0; i < ds.rows(); ++i) {
    csv += std::to_string(i);
    if (!labels.empty()) csv += "," + std::to_string(labels[i]);
    for (const auto& r : results) csv += "," + format_double(r.scores[i]);
    csv += "\n";
  }
  ctx.write_text("scores.csv", csv);

  json doc;
  doc["schema"] = kReportSchema;
  doc["command"] = "outliers";
  doc["rows"] = ds.rows();
  doc["features"] = ds.cols();
  doc["labelled"] = !labels.empty();
  json dets = json::object();
  for (std::size_t k = 0; k < kinds.size(); ++k) {
    json j;
    j["code"] = c["code"].get<std::size_t>() > 0 ? c["code"].get<std::size_t>()
                                                 : DetectorSpec::defaults(kinds[k], ds.cols()).code;
    j["final_loss"] = number(results[k].report.final_loss);
    if (!labels.empty()) {
      j["auc"] = number(evaluate_auc(results[k], labels));
      j["aupr"] = number(aupr(results[k].scores, labels));
      double inlier = 0.0;
      std::size_t count = 0;
      for (std::size_t i = 0; i < labels.size(); ++i)
        if (labels[i] == 0) {
          inlier += results[k].reconstruction_error[i];
          ++count;
        }
      j["inlier_reconstruction_error"] = number(count ? inlier / static_cast<double>(count) : 0.0);
    }
    dets[to_string(kinds[k])] = j;
  }
  doc["detectors"] = dets;
  if (!labels.empty()) {
    json deltas = json::object();
    for (auto [s, b] : {std::pair{DetectorKind::pca_s, DetectorKind::pca_baseline},
                        std::pair{DetectorKind::ae_s, DetectorKind::ae_baseline}})
      if (dets.contains(to_string(s)) && dets.contains(to_string(b)))
        deltas[std::string(to_string(s)) + "-" + to_string(b)] =
            number(dets[to_string(s)]["auc"].get<double>() - dets[to_string(b)]["auc"].get<double>());
    doc["auc_delta"] = deltas;

    std::string roc = "detector,fpr,tpr\n";
    for (std::size_t k = 0; k < kinds.size(); ++k)
      for (const auto& p : roc_curve(results[k].scores, labels))
        roc += std::string(to_string(kinds[k])) + "," + format_double(p.x) + "," + format_double(p.y) + "\n";
    ctx.write_text("roc.csv", roc);
  }
  ctx.write_json("report.json", doc);
}

}  // namespace fulllik::cli
