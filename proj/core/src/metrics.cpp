#include "fulllik/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "fulllik/errors.hpp"

namespace fulllik {
namespace {

void check_binary(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw InvalidArgument("scores and labels differ in length");
  std::size_t pos = 0;
  for (int l : labels) {
    if (l != 0 && l != 1) throw InvalidArgument("labels must be 0 or 1");
    pos += l == 1;
  }
  if (pos == 0 || pos == labels.size()) throw UndefinedMetric("both classes must be present");
  for (double s : scores)
    if (!std::isfinite(s)) throw InvalidArgument("non-finite score");
}

// Indices sorted by descending score (stable, so ties keep input order).
std::vector<std::size_t> descending(std::span<const double> scores) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return scores[a] > scores[b]; });
  return idx;
}

}  // namespace

double mse(std::span<const double> pred, std::span<const double> target) {
  if (pred.size() != target.size()) throw InvalidArgument("mse: length mismatch");
  if (pred.empty()) throw InvalidArgument("mse: empty input");
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) s += (pred[i] - target[i]) * (pred[i] - target[i]);
  return s / static_cast<double>(pred.size());
}

double nll_mean(std::span<const double> per_point) {
  if (per_point.empty()) throw InvalidArgument("nll_mean: empty input");
  double s = 0.0;
  for (double v : per_point) s += v;
  return s / static_cast<double>(per_point.size());
}

double accuracy(const Matrix& scores, std::span<const int> labels) {
  if (static_cast<std::size_t>(scores.rows()) != labels.size()) throw InvalidArgument("accuracy: row mismatch");
  if (labels.empty()) throw InvalidArgument("accuracy: empty input");
  std::size_t hits = 0;
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    Eigen::Index arg = 0;
    scores.row(i).maxCoeff(&arg);
    hits += arg == labels[static_cast<std::size_t>(i)];
  }
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

EceReport ece_report(const Matrix& probs, std::span<const int> labels, std::size_t bins) {
  if (probs.rows() == 0) throw InvalidArgument("ece: empty input");
  if (static_cast<std::size_t>(probs.rows()) != labels.size()) throw InvalidArgument("ece: row mismatch");
  if (bins == 0) throw InvalidArgument("ece: bins must be >= 1");
  EceReport rep;
  rep.bins.resize(bins);
  for (std::size_t b = 0; b < bins; ++b) {
    rep.bins[b].lower = static_cast<double>(b) / static_cast<double>(bins);
    rep.bins[b].upper = static_cast<double>(b + 1) / static_cast<double>(bins);
  }
  std::vector<double> conf_sum(bins, 0.0);
  std::vector<double> hit_sum(bins, 0.0);
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    Eigen::Index arg = 0;
    const double conf = probs.row(i).maxCoeff(&arg);
    // Bins are (lower, upper]; confidence 0 falls in the first bin.
    auto b = static_cast<std::size_t>(std::ceil(conf * static_cast<double>(bins)));
    b = b == 0 ? 0 : std::min(b - 1, bins - 1);
    rep.bins[b].count += 1;
    conf_sum[b] += conf;
    hit_sum[b] += arg == labels[static_cast<std::size_t>(i)] ? 1.0 : 0.0;
  }
  const auto n = static_cast<double>(probs.rows());
  for (std::size_t b = 0; b < bins; ++b) {
    auto& bin = rep.bins[b];
    if (bin.count == 0) continue;
    const auto c = static_cast<double>(bin.count);
    bin.confidence = conf_sum[b] / c;
    bin.accuracy = hit_sum[b] / c;
    rep.value += (c / n) * std::abs(bin.accuracy - bin.confidence);
  }
  return rep;
}

double ece(const Matrix& probs, std::span<const int> labels, std::size_t bins) {
  return ece_report(probs, labels, bins).value;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

std::vector<std::pair<double, double>> calibration_curve_from_pit(std::span<const double> pit, std::size_t levels) {
  if (pit.empty()) throw InvalidArgument("calibration: empty input");
  if (levels == 0) throw InvalidArgument("calibration: levels must be >= 1");
  std::vector<std::pair<double, double>> curve;
  for (std::size_t j = 1; j <= levels; ++j) {
    const double p = static_cast<double>(j) / static_cast<double>(levels);
    std::size_t below = 0;
    for (double u : pit) below += p >= 1.0 || u <= p;
    curve.emplace_back(p, static_cast<double>(below) / static_cast<double>(pit.size()));
  }
  return curve;
}

double cal_from_pit(std::span<const double> pit, std::size_t levels) {
  double cal = 0.0;
  for (const auto& [p, phat] : calibration_curve_from_pit(pit, levels)) cal += (p - phat) * (p - phat);
  return cal;
}

std::vector<std::pair<double, double>> calibration_curve(std::span<const double> mean,
                                                         std::span<const double> sigma,
                                                         std::span<const double> targets, std::size_t levels) {
  if (mean.size() != sigma.size() || mean.size() != targets.size())
    throw InvalidArgument("cal_regression: length mismatch");
  // A target lies at or below the p-quantile exactly when its PIT value is <= p.
  std::vector<double> pit(mean.size());
  for (std::size_t i = 0; i < mean.size(); ++i) {
    if (!(sigma[i] >= 0.0)) throw InvalidArgument("cal_regression: sigma must be non-negative");
    const double r = targets[i] - mean[i];
    if (sigma[i] == 0.0) {
      pit[i] = r < 0.0 ? 0.0 : (r > 0.0 ? 1.0 : 0.5);
    } else {
      pit[i] = normal_cdf(r / sigma[i]);
    }
  }
  return calibration_curve_from_pit(pit, levels);
}

double cal_regression(std::span<const double> mean, std::span<const double> sigma, std::span<const double> targets,
                      std::size_t levels) {
  double cal = 0.0;
  for (const auto& [p, phat] : calibration_curve(mean, sigma, targets, levels)) cal += (p - phat) * (p - phat);
  return cal;
}

double roc_auc(std::span<const double> scores, std::span<const int> labels) {
  check_binary(scores, labels);
  // Mann-Whitney U with midranks.
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return scores[a] < scores[b]; });
  double pos_rank_sum = 0.0;
  std::size_t pos = 0;
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) ++j;
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k)
      if (labels[idx[k]] == 1) {
        pos_rank_sum += midrank;
        ++pos;
      }
    i = j;
  }
  const auto np = static_cast<double>(pos);
  const auto nn = static_cast<double>(scores.size() - pos);
  return (pos_rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

std::vector<CurvePoint> roc_curve(std::span<const double> scores, std::span<const int> labels) {
  check_binary(scores, labels);
  const auto idx = descending(scores);
  const double np = static_cast<double>(std::count(labels.begin(), labels.end(), 1));
  const double nn = static_cast<double>(labels.size()) - np;
  std::vector<CurvePoint> pts{{0.0, 0.0}};
  double tp = 0.0, fp = 0.0;
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) {
      (labels[idx[j]] == 1 ? tp : fp) += 1.0;
      ++j;
    }
    pts.push_back({fp / nn, tp / np});
    i = j;
  }
  return pts;
}

std::vector<CurvePoint> pr_curve(std::span<const double> scores, std::span<const int> labels) {
  check_binary(scores, labels);
  const auto idx = descending(scores);
  const double np = static_cast<double>(std::count(labels.begin(), labels.end(), 1));
  std::vector<CurvePoint> pts;
  double tp = 0.0, seen = 0.0;
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) {
      tp += labels[idx[j]] == 1 ? 1.0 : 0.0;
      seen += 1.0;
      ++j;
    }
    pts.push_back({tp / np, tp / seen});
    i = j;
  }
  return pts;
}

double aupr(std::span<const double> scores, std::span<const int> labels) {
  double ap = 0.0, prev_recall = 0.0;
  for (const auto& p : pr_curve(scores, labels)) {
    ap += (p.x - prev_recall) * p.y;
    prev_recall = p.x;
  }
  return ap;
}

}  // namespace fulllik
