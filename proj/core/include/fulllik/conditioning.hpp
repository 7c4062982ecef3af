#pragma once

// Likelihood-parameter conditioning: one value shared by every point
// (global), one value per training index (data), or a value regressed from
// features by a small head model (predicted).

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fulllik/dataset.hpp"
#include "fulllik/model.hpp"
#include "fulllik/transform.hpp"

namespace fulllik {

enum class ProviderKind { global, data, predicted };

const char* to_string(ProviderKind kind);

/// What a provider needs to produce parameters for a batch: training indices
/// (data kind), head input rows (predicted kind), or only a row count.
struct ParamRequest {
  std::span<const std::size_t> indices;
  const Matrix* features = nullptr;
  std::size_t batch = 0;
  bool inference = false;

  std::size_t rows() const;
};

struct ParamGradients {
  /// Gradient with respect to the unconstrained store (same layout).
  std::vector<double> store;
  /// Data kind: 1 where a store entry received a gradient this step.
  std::vector<std::uint8_t> touched;
  /// Predicted kind: gradient with respect to the raw head input. Exactly zero
  /// when the provider is isolated.
  Matrix features;
};

class ParamProvider {
 public:
  static ParamProvider global(std::size_t dim, TransformSpec transform, double init_value);
  static ParamProvider data(std::size_t n, std::size_t dim, TransformSpec transform, double init_value);
  /// `head` maps head inputs to `head.output` unconstrained values. Hidden
  /// layers (if any) use Glorot init from `seed`; the final layer starts with
  /// zero weights and bias inverse(init_value).
  static ParamProvider predicted(const Architecture& head, bool isolated, TransformSpec transform,
                                 double init_value, std::uint64_t seed, bool standardize_inputs = true);

  ProviderKind kind() const { return kind_; }
  std::size_t dim() const { return dim_; }
  /// Training-set size for data providers, 0 otherwise.
  std::size_t rows() const { return n_; }
  const TransformSpec& transform() const { return transform_; }
  bool isolated() const { return isolated_; }
  void set_isolated(bool isolated) { isolated_ = isolated; }
  const Model* head() const { return kind_ == ProviderKind::predicted ? &head_ : nullptr; }

  /// Constrained parameters, batch x dim.
  Matrix get_params(const ParamRequest& req) const;
  /// Chain-rules d-objective/d-constrained-parameter (batch x dim) back to the
  /// unconstrained store and, for predicted providers, to the head input.
  ParamGradients accumulate_grads(const ParamRequest& req, const Matrix& upstream) const;

  std::span<const double> store() const;
  std::span<double> mutable_store();

  /// Predicted kind: fixes the per-column standardization applied before the
  /// head. No-op when standardization is disabled.
  void fit_standardizer(const Matrix& features);
  bool standardizes_inputs() const { return standardize_; }

  /// Data kind: makes every index share one storage row.
  void tie_all_rows();

  /// Number of stored likelihood parameters (space accounting).
  std::size_t parameter_count() const;
  /// Asymptotic space/time class of this conditioning.
  std::string space_class() const;
  std::string time_class() const;

 private:
  ParamProvider() = default;
  std::size_t storage_row(std::size_t index) const;
  Matrix head_input(const Matrix& features) const;
  void check_request(const ParamRequest& req) const;

  ProviderKind kind_ = ProviderKind::global;
  std::size_t dim_ = 1;
  std::size_t n_ = 0;
  TransformSpec transform_;
  std::vector<double> store_;  // global and data kinds
  bool tied_ = false;
  Model head_;
  bool isolated_ = false;
  bool standardize_ = true;
  std::vector<double> input_mean_;
  std::vector<double> input_scale_;
};

}  // namespace fulllik
