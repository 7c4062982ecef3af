#pragma once

// Prior NLL terms over model weights with learnable scales. A Laplace prior
// with one shared scale is the dynamic LASSO; one scale per weight gives the
// multi variant. Normal priors are the ridge analogs.

#include <cstddef>
#include <span>
#include <vector>

#include "fulllik/model.hpp"
#include "fulllik/transform.hpp"

namespace fulllik {

enum class PriorFamily { normal, laplace };
enum class PriorGranularity { dynamic, multi };

const char* to_string(PriorFamily f);
const char* to_string(PriorGranularity g);

class PriorSpec {
 public:
  struct Grads {
    std::vector<double> theta;   // full model-weight length; zero off the covered set
    std::vector<double> scales;  // d / d unconstrained scale store
  };

  /// `covered` lists the model-weight indices the prior applies to.
  PriorSpec(PriorFamily family, PriorGranularity granularity, std::vector<std::size_t> covered,
            double init_scale = 1.0, TransformSpec transform = transforms::prior_scale());

  /// Indices of every non-bias weight of `model` (the default coverage).
  static std::vector<std::size_t> non_bias_indices(const Model& model);

  PriorFamily family() const { return family_; }
  PriorGranularity granularity() const { return granularity_; }
  const std::vector<std::size_t>& covered() const { return covered_; }
  const TransformSpec& transform() const { return transform_; }

  /// Summed prior NLL including the log 2 / (1/2) log 2 pi normalizers.
  double nll(std::span<const double> theta) const;
  /// The same sum without those constants.
  double raw_nll(std::span<const double> theta) const;
  Grads grads(std::span<const double> theta) const;

  /// Constrained scale for covered weight k (b or sigma).
  double scale(std::size_t k) const;
  std::vector<double> scales() const;
  /// 1/b (Laplace) or 1/sigma^2 (normal), one entry per covered weight.
  std::vector<double> effective_lambda() const;

  std::span<const double> store() const { return store_; }
  std::span<double> mutable_store() { return store_; }
  bool frozen() const { return frozen_; }
  void set_frozen(bool frozen) { frozen_ = frozen; }

 private:
  void check_theta(std::span<const double> theta) const;
  double weight_at(std::span<const double> theta, std::size_t k) const { return theta[covered_[k]]; }
  std::size_t slot(std::size_t k) const { return granularity_ == PriorGranularity::dynamic ? 0 : k; }

  PriorFamily family_;
  PriorGranularity granularity_;
  std::vector<std::size_t> covered_;
  TransformSpec transform_;
  std::vector<double> store_;
  bool frozen_ = false;
};

}  // namespace fulllik
