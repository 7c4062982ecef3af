#include <algorithm>
#include <cmath>
#include <numbers>

#include "fulllik/dataset.hpp"
#include "fulllik/errors.hpp"
#include "fulllik/rng.hpp"

namespace fulllik {
namespace {

std::size_t contaminated_count(std::size_t n, double fraction) {
  // ceil with a guard so that e.g. 0.1 * 400 stays 40.
  return static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n) - 1e-9));
}

void check_fraction(double f, double upper, const char* what) {
  if (!(f >= 0.0 && f < upper)) throw InvalidArgument(std::string(what) + " out of range");
}

std::vector<std::string> numbered(const std::string& prefix, std::size_t d) {
  std::vector<std::string> names;
  for (std::size_t j = 0; j < d; ++j) names.push_back(prefix + std::to_string(j));
  return names;
}

// Fisher-Yates permutation of row order, applied to every per-row field.
void shuffle_rows(Dataset& ds, Rng& rng) {
  const std::size_t n = ds.rows();
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
  Dataset shuffled = ds.subset(perm);
  for (std::size_t i = 0; i < n; ++i) shuffled.row_ids[i] = i;
  ds = std::move(shuffled);
}

}  // namespace

SparseLinearData gen_sparse_linear(std::size_t n, std::size_t d, double density, double noise,
                                   std::uint64_t seed) {
  if (!(density >= 0.0 && density <= 1.0)) throw InvalidArgument("sparsity must lie in [0, 1]");
  if (!(noise >= 0.0)) throw InvalidArgument("noise must be >= 0");
  SparseLinearData out;
  Rng weight_rng(seed, "sparse_linear/weights");
  out.true_weights.resize(d);
  for (auto& w : out.true_weights) w = weight_rng.uniform(1.0, 2.0);

  // Zero a (1 - density) fraction at seeded positions.
  const auto n_zero = static_cast<std::size_t>(std::llround((1.0 - density) * static_cast<double>(d)));
  std::vector<std::size_t> perm(d);
  for (std::size_t j = 0; j < d; ++j) perm[j] = j;
  Rng support_rng(seed, "sparse_linear/support");
  for (std::size_t j = d; j > 1; --j) std::swap(perm[j - 1], perm[support_rng.below(j)]);
  for (std::size_t k = 0; k < n_zero; ++k) out.true_weights[perm[k]] = 0.0;

  Dataset& ds = out.data;
  ds.features.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  Rng feature_rng(seed, "sparse_linear/features");
  for (Eigen::Index i = 0; i < ds.features.rows(); ++i)
    for (Eigen::Index j = 0; j < ds.features.cols(); ++j) ds.features(i, j) = feature_rng.normal();
  Rng noise_rng(seed, "sparse_linear/noise");
  ds.targets.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double y = 0.0;
    for (std::size_t j = 0; j < d; ++j)
      y += ds.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) * out.true_weights[j];
    ds.targets[i] = y + noise * noise_rng.normal();
    ds.row_ids.push_back(i);
  }
  ds.target_kind = TargetKind::real;
  ds.column_names = numbered("x", d);
  ds.target_name = "y";
  return out;
}

Dataset gen_outlier_classification(std::size_t n, double outlier_fraction, std::uint64_t seed) {
  check_fraction(outlier_fraction, 0.5, "outlier fraction");
  constexpr double kClassOffset = 1.5;
  constexpr double kClassSpread = 0.5;
  constexpr double kClusterX = -5.0;
  constexpr double kClusterY = 0.0;
  constexpr double kClusterSpread = 0.4;

  const std::size_t n_out = contaminated_count(n, outlier_fraction);
  const std::size_t n_in = n - n_out;
  Dataset ds;
  ds.features.resize(static_cast<Eigen::Index>(n), 2);
  Rng rng(seed, "outlier_classification/points");
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    if (i < n_in) {
      const int label = static_cast<int>(i % 2);
      const double cx = label == 0 ? -kClassOffset : kClassOffset;
      ds.features(r, 0) = cx + kClassSpread * rng.normal();
      ds.features(r, 1) = kClassSpread * rng.normal();
      ds.labels.push_back(label);
      ds.outlier_flags.push_back(0);
    } else {
      // Sits on the class-0 side but carries label 1.
      ds.features(r, 0) = kClusterX + kClusterSpread * rng.normal();
      ds.features(r, 1) = kClusterY + kClusterSpread * rng.normal();
      ds.labels.push_back(1);
      ds.outlier_flags.push_back(1);
    }
    ds.row_ids.push_back(i);
  }
  ds.target_kind = TargetKind::classes;
  ds.column_names = {"x0", "x1"};
  ds.target_name = "label";
  Rng order(seed, "outlier_classification/order");
  shuffle_rows(ds, order);
  return ds;
}

Dataset gen_outlier_regression(std::size_t n, double fraction, std::uint64_t seed) {
  check_fraction(fraction, 0.5, "outlier fraction");
  const std::size_t n_out = contaminated_count(n, fraction);
  Dataset ds;
  ds.features.resize(static_cast<Eigen::Index>(n), 1);
  Rng rng(seed, "outlier_regression/points");
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    if (i < n - n_out) {
      const double x = rng.normal();
      ds.features(r, 0) = x;
      ds.targets.push_back(kOutlierRegressionSlope * x + 1.0 + 0.5 * rng.normal());
      ds.outlier_flags.push_back(0);
    } else {
      // Large-x deviant points: high leverage and strongly wrong y.
      const double x = 3.0 + 0.5 * rng.normal();
      ds.features(r, 0) = x;
      ds.targets.push_back(-4.0 + 1.0 * rng.normal());
      ds.outlier_flags.push_back(1);
    }
    ds.row_ids.push_back(i);
  }
  ds.target_kind = TargetKind::real;
  ds.column_names = {"x"};
  ds.target_name = "y";
  Rng order(seed, "outlier_regression/order");
  shuffle_rows(ds, order);
  return ds;
}

Dataset gen_heteroskedastic(std::size_t n, std::uint64_t seed) {
  Dataset ds;
  ds.features.resize(static_cast<Eigen::Index>(n), 1);
  Rng rng(seed, "heteroskedastic/points");
  for (std::size_t i = 0; i < n; ++i) {
    const double x = rng.uniform(0.0, 4.0);
    const double sd = 0.1 + 0.4 * x;
    ds.features(static_cast<Eigen::Index>(i), 0) = x;
    ds.targets.push_back(kHeteroskedasticSlope * x + sd * rng.normal());
    ds.row_ids.push_back(i);
  }
  ds.target_kind = TargetKind::real;
  ds.column_names = {"x"};
  ds.target_name = "y";
  return ds;
}

Dataset gen_contaminated_gaussian(std::size_t n, std::size_t d, double fraction, double radius,
                                  std::uint64_t seed) {
  check_fraction(fraction, 1.0, "contamination fraction");
  if (d == 0) throw InvalidArgument("dimension must be positive");
  if (!(radius > 0.0)) throw InvalidArgument("radius must be positive");
  const std::size_t n_out = contaminated_count(n, fraction);
  Dataset ds;
  ds.features.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  Rng rng(seed, "contaminated_gaussian/points");
  for (std::size_t i = 0; i < n; ++i) {
    auto row = ds.features.row(static_cast<Eigen::Index>(i));
    for (std::size_t j = 0; j < d; ++j) row(static_cast<Eigen::Index>(j)) = rng.normal();
    const bool outlier = i >= n - n_out;
    if (outlier) {
      const double r = radius * rng.uniform(1.0, 1.5);
      row *= r / row.norm();
    }
    ds.labels.push_back(outlier ? 1 : 0);
    ds.outlier_flags.push_back(outlier ? 1 : 0);
    ds.row_ids.push_back(i);
  }
  ds.target_kind = TargetKind::classes;
  ds.column_names = numbered("x", d);
  ds.target_name = "outlier";
  Rng order(seed, "contaminated_gaussian/order");
  shuffle_rows(ds, order);
  return ds;
}

Dataset gen_blobs(std::size_t n, std::size_t d, int classes, double spread, std::uint64_t seed,
                  std::uint64_t draw) {
  if (classes < 2) throw InvalidArgument("blobs need at least two classes");
  Rng mean_rng(seed, "blobs/means");
  Matrix means(classes, static_cast<Eigen::Index>(d));
  for (Eigen::Index k = 0; k < means.rows(); ++k)
    for (Eigen::Index j = 0; j < means.cols(); ++j) means(k, j) = spread * mean_rng.normal();

  Rng rng(Rng::derive(seed, "blobs/draw") + draw, "blobs/points");
  Dataset ds;
  ds.features.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < n; ++i) {
    const int label = static_cast<int>(rng.below(static_cast<std::uint64_t>(classes)));
    for (std::size_t j = 0; j < d; ++j)
      ds.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          means(label, static_cast<Eigen::Index>(j)) + rng.normal();
    ds.labels.push_back(label);
    ds.row_ids.push_back(i);
  }
  ds.target_kind = TargetKind::classes;
  ds.column_names = numbered("x", d);
  ds.target_name = "label";
  return ds;
}

namespace {

double get_double(const std::map<std::string, std::string>& p, const std::string& key, double def) {
  const auto it = p.find(key);
  if (it == p.end()) return def;
  try {
    std::size_t used = 0;
    const double v = std::stod(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument(key);
    return v;
  } catch (const std::exception&) {
    throw InvalidArgument("generator parameter '" + key + "' is not a number");
  }
}

std::size_t get_count(const std::map<std::string, std::string>& p, const std::string& key,
                      std::size_t def) {
  const double v = get_double(p, key, static_cast<double>(def));
  if (v < 0 || v != std::floor(v)) throw InvalidArgument("generator parameter '" + key + "' must be a count");
  return static_cast<std::size_t>(v);
}

void check_keys(const std::map<std::string, std::string>& p, std::initializer_list<const char*> allowed) {
  for (const auto& [k, v] : p) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || k == a;
    if (!ok) throw InvalidArgument("unknown generator parameter '" + k + "'");
  }
}

}  // namespace

std::vector<std::string> generator_names() {
  return {"sparse_linear", "outlier_classification", "outlier_regression", "heteroskedastic",
          "contaminated_gaussian", "blobs"};
}

GeneratedData generate(const std::string& name, const std::map<std::string, std::string>& p,
                       std::uint64_t default_seed) {
  const auto seed = static_cast<std::uint64_t>(get_double(p, "seed", static_cast<double>(default_seed)));
  GeneratedData out;
  if (name == "sparse_linear") {
    check_keys(p, {"n", "d", "sparsity", "noise", "seed"});
    auto g = gen_sparse_linear(get_count(p, "n", 200), get_count(p, "d", 100),
                               get_double(p, "sparsity", 0.1), get_double(p, "noise", 1.0), seed);
    out.data = std::move(g.data);
    out.true_weights = std::move(g.true_weights);
  } else if (name == "outlier_classification") {
    check_keys(p, {"n", "fraction", "seed"});
    out.data = gen_outlier_classification(get_count(p, "n", 400), get_double(p, "fraction", 0.1), seed);
  } else if (name == "outlier_regression") {
    check_keys(p, {"n", "fraction", "seed"});
    out.data = gen_outlier_regression(get_count(p, "n", 200), get_double(p, "fraction", 0.2), seed);
  } else if (name == "heteroskedastic") {
    check_keys(p, {"n", "seed"});
    out.data = gen_heteroskedastic(get_count(p, "n", 400), seed);
  } else if (name == "contaminated_gaussian") {
    check_keys(p, {"n", "d", "fraction", "radius", "seed"});
    out.data = gen_contaminated_gaussian(get_count(p, "n", 500), get_count(p, "d", 10),
                                         get_double(p, "fraction", 0.05),
                                         get_double(p, "radius", 6.0), seed);
  } else if (name == "blobs") {
    check_keys(p, {"n", "d", "classes", "spread", "seed", "draw"});
    out.data = gen_blobs(get_count(p, "n", 300), get_count(p, "d", 10),
                         static_cast<int>(get_count(p, "classes", 4)), get_double(p, "spread", 1.0),
                         seed, get_count(p, "draw", 0));
  } else {
    throw InvalidArgument("unknown generator '" + name + "'");
  }
  return out;
}

}  // namespace fulllik
