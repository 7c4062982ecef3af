#pragma once

// Scale-as-score outlier detection: an autoencoder fitted under a normal
// likelihood with one learnable scale per row. The fitted scale is the score.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "fulllik/dataset.hpp"
#include "fulllik/fit.hpp"

namespace fulllik {

enum class DetectorKind { pca_s, ae_s, pca_baseline, ae_baseline };

const char* to_string(DetectorKind k);
DetectorKind parse_detector(const std::string& s);

struct DetectorSpec {
  DetectorKind kind = DetectorKind::pca_s;
  std::size_t code = 1;
  /// Encoder hidden widths for the deep kinds (mirrored in the decoder).
  std::vector<std::size_t> hidden{16};
  double dropout = 0.2;
  /// 1 = one scale per row; the feature count = one scale per cell.
  std::size_t scale_dim = 1;
  /// PCA kinds: initialize the linear autoencoder from the top singular vectors.
  /// Off by default: the top direction then already points at any extreme row.
  bool svd_warm_start = false;
  FitConfig fit;

  /// Defaults for a kind on `features` columns (code = columns / 4).
  static DetectorSpec defaults(DetectorKind kind, std::size_t features);
};

struct OutlierScores {
  DetectorKind kind = DetectorKind::pca_s;
  std::vector<double> scores;               // higher = more outlying
  std::vector<double> reconstruction_error; // per-row mean squared error
  FitReport report;
};

/// Fits the detector on every row and scores the same rows.
OutlierScores detect(const DetectorSpec& spec, const Dataset& data);

/// ROC AUC of the scores against 0/1 labels.
double evaluate_auc(const OutlierScores& scores, std::span<const int> labels);

/// Linear-autoencoder weights (encoder then decoder) spanning the top `code`
/// principal directions of `x`.
std::vector<double> pca_autoencoder_weights(const Matrix& x, std::size_t code);

}  // namespace fulllik
