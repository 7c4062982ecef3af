#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace fulllik {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

enum class TargetKind { none, real, classes };

/// Per-column statistics used to standardize features (and optionally a real
/// target). Population standard deviation; constant columns keep scale 1.
struct Standardization {
  std::vector<double> mean;
  std::vector<double> scale;
  std::optional<double> target_mean;
  std::optional<double> target_scale;
  std::vector<std::string> warnings;

  bool fitted() const { return !mean.empty(); }
};

struct Dataset {
  Matrix features;
  TargetKind target_kind = TargetKind::none;
  std::vector<double> targets;  // real targets
  std::vector<int> labels;      // class indices
  std::vector<std::string> column_names;
  std::string target_name;
  Standardization standardization;
  std::vector<std::size_t> row_ids;
  /// Ground-truth contamination flags from generators (empty when unknown).
  std::vector<int> outlier_flags;

  std::size_t rows() const { return static_cast<std::size_t>(features.rows()); }
  std::size_t cols() const { return static_cast<std::size_t>(features.cols()); }
  int num_classes() const;
  Dataset subset(std::span<const std::size_t> rows) const;
  /// Real targets as an n x 1 matrix.
  Matrix target_matrix() const;
};

/// A header plus numeric cells; empty cells are NaN.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  std::size_t column(const std::string& name) const;
};

/// Comma separator, dot decimal, mandatory header. Empty cells become NaN;
/// any other non-numeric cell is a ParseError.
CsvTable read_csv_table(const std::string& path);
void write_csv_table(const std::string& path, const CsvTable& table);
/// Shortest round-trip decimal representation of a double.
std::string format_double(double v);

/// Loads features (every column except `target_column`) and the optional
/// target. Missing feature cells are imputed with the column mean; a missing
/// target cell is a ParseError.
Dataset load_csv(const std::string& path, const std::optional<std::string>& target_column,
                 TargetKind kind);
void write_csv(const std::string& path, const Dataset& ds);

/// Fits statistics on `fit_rows` (all rows when empty) and applies them to
/// every row. Real targets are standardized too when `include_target`.
Dataset standardize(const Dataset& ds, std::span<const std::size_t> fit_rows = {},
                    bool include_target = false);
/// Applies previously fitted statistics (e.g. train statistics to a test set).
Dataset apply_standardization(const Dataset& ds, const Standardization& stats);

/// Seeded shuffle split into (train, test) row indices.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> train_test_split(
    std::size_t n, double test_fraction, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Synthetic generators. All are pure functions of their arguments. Random
// streams are derived from `seed` by name (see Rng), one stream per use.

struct SparseLinearData {
  Dataset data;
  std::vector<double> true_weights;
};

/// Standard-normal features, weights Uniform[1, 2] with a (1 - density)
/// fraction zeroed at seeded positions, targets X w* + N(0, noise^2).
SparseLinearData gen_sparse_linear(std::size_t n, std::size_t d, double density, double noise,
                                   std::uint64_t seed);

/// Two separable 2-D Gaussian classes plus a far-away cluster of
/// flipped-label points beyond class 0 on the class axis. `outlier_flags`
/// marks the cluster.
Dataset gen_outlier_classification(std::size_t n, double outlier_fraction, std::uint64_t seed);

/// y = 2 x + 1 + N(0, 0.5^2) on x ~ N(0, 1), with a `fraction` of gross
/// outliers at large x and strongly deviant y.
Dataset gen_outlier_regression(std::size_t n, double fraction, std::uint64_t seed);
inline constexpr double kOutlierRegressionSlope = 2.0;

/// y = 1.5 x + eps, x ~ U[0, 4], eps ~ N(0, (0.1 + 0.4 x)^2).
Dataset gen_heteroskedastic(std::size_t n, std::uint64_t seed);
inline constexpr double kHeteroskedasticSlope = 1.5;

/// Isotropic N(0, I_d) inliers plus ceil(fraction * n) outliers at radius in
/// [radius, 1.5 radius] along uniform random directions. Labels: 1 = outlier.
Dataset gen_contaminated_gaussian(std::size_t n, std::size_t d, double fraction, double radius,
                                  std::uint64_t seed);

/// `classes` Gaussian blobs with unit covariance around means drawn from
/// N(0, spread^2 I). The means depend only on `seed`; `draw` selects an
/// independent sample (use different draws for train/validation/test).
Dataset gen_blobs(std::size_t n, std::size_t d, int classes, double spread, std::uint64_t seed,
                  std::uint64_t draw = 0);

struct GeneratedData {
  Dataset data;
  std::vector<double> true_weights;  // only for sparse_linear
};

/// Dispatches `gen:<name>?k=v&...` style requests. Unknown names or keys throw
/// InvalidArgument.
GeneratedData generate(const std::string& name, const std::map<std::string, std::string>& params,
                       std::uint64_t default_seed);
std::vector<std::string> generator_names();

}  // namespace fulllik
