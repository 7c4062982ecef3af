#pragma once

// Seeded paired runs behind the application criteria. Each returns the raw
// numbers so the criteria (and tuning runs) can print them.

#include <cstdint>

namespace scenarios {

struct LassoRun {
  // Squared recovery error; grid_min is the best point of the lambda grid.
  double grid_min = 0.0;
  double dynamic_error = 0.0;
  double multi_error = 0.0;
};
LassoRun adaptive_lasso_run(std::uint64_t seed);

struct TemperatureRun {
  double fixed_accuracy = 0.0;
  double predicted_accuracy = 0.0;
};
TemperatureRun temperature_run(std::uint64_t seed);

struct SlopeRun {
  double ols_error = 0.0;
  double predicted_error = 0.0;
};
SlopeRun robust_slope_run(std::uint64_t seed);

struct HeteroskedasticRun {
  double fixed_cal = 0.0;
  double predicted_cal = 0.0;
};
HeteroskedasticRun heteroskedastic_run(std::uint64_t seed);

struct OutlierRun {
  double pca_s = 0.0;
  double pca_baseline = 0.0;
  double ae_s = 0.0;
  double ae_baseline = 0.0;
};
OutlierRun outlier_run(std::uint64_t seed, bool with_autoencoders);

struct RecalibrationRun {
  double uncalibrated = 0.0;
  double gs = 0.0;
  double ls = 0.0;
  double lfs = 0.0;
  double base_test_accuracy = 0.0;
  bool argmax_preserved = true;
};
RecalibrationRun recalibration_run(std::uint64_t seed);

}  // namespace scenarios
