#pragma once

// Post-hoc recalibration on a held-out split: temperature or scale heads
// (global, vector, linear-of-logits, linear-of-features, deep-of-features)
// plus Platt scaling and isotonic regression.

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "fulllik/dataset.hpp"
#include "fulllik/fit.hpp"
#include "fulllik/isotonic.hpp"
#include "fulllik/objective.hpp"

namespace fulllik {

enum class RecalKind {
  global_scaling,
  vector_scaling,
  linear_scaling,
  linear_feature_scaling,
  deep_scaling,
  platt,
  isotonic
};

const char* to_string(RecalKind k);
/// Short method names: GS, VS, LS, LFS, DS, platt, isotonic.
const char* short_name(RecalKind k);
RecalKind parse_recal_kind(const std::string& s);

/// Base-model outputs on one split. Classification: `outputs` holds logits
/// and `labels` the classes. Regression: `outputs` holds the predicted mean
/// (one column), `targets` the truth, and `base_sigma` the base model's own
/// predictive scale.
struct CalibrationInput {
  Matrix outputs;
  Matrix features;  // penultimate representation (LFS / DS)
  std::vector<int> labels;
  std::vector<double> targets;
  std::vector<double> base_sigma;
  std::string split = "validation";

  bool classification() const { return !labels.empty(); }
  std::size_t rows() const { return static_cast<std::size_t>(outputs.rows()); }
  void validate() const;
};

struct RecalConfig {
  FitConfig fit;
  std::vector<std::size_t> deep_hidden{16, 16};
  std::size_t ece_bins = 15;
  std::size_t cal_levels = 10;
  /// Regression GS: learn a factor on base_sigma instead of an absolute sigma.
  bool relative_regression_scale = false;

  static RecalConfig defaults();
};

class Recalibrator {
 public:
  static Recalibrator fit(RecalKind kind, const CalibrationInput& val, const RecalConfig& cfg);

  RecalKind kind() const { return kind_; }
  bool classification() const { return classification_; }

  /// Calibrated class probabilities (classification).
  Matrix probabilities(const CalibrationInput& in) const;
  /// Per-row temperatures (temperature kinds) or scales (regression kinds).
  std::vector<double> parameter(const CalibrationInput& in) const;
  /// Calibrated probability-integral-transform values of the targets
  /// (regression).
  std::vector<double> pit(const CalibrationInput& in) const;

  /// Mean validation NLL at initialization and after fitting (scaling kinds).
  double initial_nll() const { return initial_nll_; }
  double fitted_nll() const { return fitted_nll_; }

 private:
  void check_shape(const CalibrationInput& in) const;
  Matrix head_params(const CalibrationInput& in) const;

  RecalKind kind_ = RecalKind::global_scaling;
  bool classification_ = true;
  std::size_t width_ = 0;
  std::size_t feature_width_ = 0;
  std::optional<LikelihoodSpec> likelihood_;
  bool relative_ = false;
  std::vector<double> vs_weight_, vs_bias_;
  std::vector<double> platt_a_, platt_b_;
  std::vector<IsotonicFit> iso_;
  double initial_nll_ = 0.0;
  double fitted_nll_ = 0.0;
};

/// Uncalibrated probabilities softmax(z) or PIT values under base_sigma.
Matrix uncalibrated_probabilities(const CalibrationInput& in);
std::vector<double> uncalibrated_pit(const CalibrationInput& in);

struct CalibrationRow {
  std::string method;
  std::optional<double> value;  // ECE (classification) or CAL (regression)
  std::optional<double> mean_parameter;  // mean tau / sigma where applicable
  std::string error;            // non-empty when the method failed
};

struct CalibrationTable {
  std::string metric;  // "ECE" or "CAL"
  std::vector<CalibrationRow> rows;
};

/// Fits each method on `val`, scores it on `test`. Classification methods:
/// uncalibrated, platt, isotonic, GS, VS, LS, LFS. Regression: uncalibrated,
/// isotonic, GS, LS, DS.
CalibrationTable compare_methods(const CalibrationInput& val, const CalibrationInput& test, const RecalConfig& cfg);

}  // namespace fulllik
