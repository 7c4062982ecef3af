#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "fulllik/dataset.hpp"

namespace fulllik {

double mse(std::span<const double> pred, std::span<const double> target);
double nll_mean(std::span<const double> per_point);
/// Fraction of rows whose argmax matches the label.
double accuracy(const Matrix& scores, std::span<const int> labels);

struct CalibrationBin {
  double lower = 0.0;
  double upper = 0.0;
  std::size_t count = 0;
  double confidence = 0.0;  // mean max-probability in the bin
  double accuracy = 0.0;
};

struct EceReport {
  double value = 0.0;
  std::vector<CalibrationBin> bins;
};

/// Expected calibration error over equal-width bins of the max-probability.
EceReport ece_report(const Matrix& probs, std::span<const int> labels, std::size_t bins = 15);
double ece(const Matrix& probs, std::span<const int> labels, std::size_t bins = 15);

/// Sum over levels p_j = j / levels (j = 1..levels) of (p_j - phat_j)^2, where
/// phat_j is the fraction of targets at or below the p_j quantile of their
/// predictive normal.
double cal_regression(std::span<const double> mean, std::span<const double> sigma,
                      std::span<const double> targets, std::size_t levels = 10);
/// The (p_j, phat_j) pairs behind cal_regression.
std::vector<std::pair<double, double>> calibration_curve(std::span<const double> mean,
                                                         std::span<const double> sigma,
                                                         std::span<const double> targets,
                                                         std::size_t levels = 10);

/// CAL computed from probability-integral-transform values u_i = F_i(y_i).
double cal_from_pit(std::span<const double> pit, std::size_t levels = 10);
std::vector<std::pair<double, double>> calibration_curve_from_pit(std::span<const double> pit,
                                                                  std::size_t levels = 10);

/// ROC AUC with midrank tie handling. Labels are 0/1; throws UndefinedMetric
/// unless both classes are present.
double roc_auc(std::span<const double> scores, std::span<const int> labels);
/// Average precision: step-interpolated area under the precision-recall curve.
double aupr(std::span<const double> scores, std::span<const int> labels);

struct CurvePoint {
  double x = 0.0;
  double y = 0.0;
};
/// (false positive rate, true positive rate), thresholds descending.
std::vector<CurvePoint> roc_curve(std::span<const double> scores, std::span<const int> labels);
/// (recall, precision), thresholds descending.
std::vector<CurvePoint> pr_curve(std::span<const double> scores, std::span<const int> labels);

/// Standard normal CDF.
double normal_cdf(double z);

}  // namespace fulllik
