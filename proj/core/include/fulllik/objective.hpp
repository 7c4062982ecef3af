#pragma once

// Batch evaluation of the joint objective: mean NLL over a batch, optional
// prior and decay terms, and gradients for every trainable block.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fulllik/conditioning.hpp"
#include "fulllik/dataset.hpp"
#include "fulllik/model.hpp"
#include "fulllik/priors.hpp"
#include "fulllik/transform.hpp"

namespace fulllik {

class Rng;

enum class Family { normal, laplace, softmax, robust };
enum class Task { regression, classification, reconstruction };
/// What a predicted provider's head reads: the model input, the model's
/// penultimate representation, or a caller-supplied side matrix.
enum class HeadInput { features, representation, side };

const char* to_string(Family f);
const char* to_string(Task t);
const char* to_string(HeadInput h);
Family parse_family(std::string_view s);

struct LikelihoodSlot {
  std::string name;
  TransformSpec transform;
  double fixed_value = 1.0;
  std::optional<ParamProvider> provider;
  HeadInput head_input = HeadInput::features;

  bool learnable() const { return provider.has_value(); }
  void freeze(double value);
  void make_global(double init, std::size_t dim = 1);
  void make_data(std::size_t n, double init, std::size_t dim = 1);
  void make_predicted(const Architecture& head, bool isolated, double init, std::uint64_t seed,
                      HeadInput input = HeadInput::features, bool standardize_inputs = true);
};

/// A distribution family plus its parameter slots. Every slot starts fixed;
/// the defaults are sigma = b = tau = 1 and robust alpha = 1.
struct LikelihoodSpec {
  Family family = Family::normal;
  std::vector<LikelihoodSlot> slots;

  static LikelihoodSpec make(Family family);
  LikelihoodSlot& slot(std::string_view name);
  const LikelihoodSlot& slot(std::string_view name) const;
  bool has_data_provider() const;
  std::size_t parameter_count() const;
};

/// The task implied by a likelihood family and architecture.
Task infer_task(Family family, const Model* model, const Dataset& data);

/// Rows of a dataset fed through the objective. An empty `rows` span means
/// every row. Data providers index training rows by position in `data`.
struct Batch {
  const Dataset* data = nullptr;
  std::span<const std::size_t> rows;
  const Matrix* side = nullptr;  // full-height side matrix (HeadInput::side)
  bool training = true;
};

struct ObjectiveTerms {
  Model* model = nullptr;  // null: predictions are the input features
  LikelihoodSpec* likelihood = nullptr;
  PriorSpec* prior = nullptr;
  Task task = Task::regression;
  /// Multiplies the summed prior NLL (1 / training-set size keeps it on the
  /// scale of the mean data NLL).
  double prior_weight = 1.0;
  double weight_decay = 0.0;      // (decay / 2) * |theta|^2
  double likelihood_decay = 0.0;  // (decay / 2) * |phi|^2 over slot stores
};

struct JointGradients {
  std::vector<double> model;
  std::vector<std::vector<double>> slots;  // empty vector for fixed slots
  std::vector<std::vector<std::uint8_t>> touched;
  std::vector<double> prior;

  double squared_norm() const;
  void scale(double factor);
  bool finite() const;
};

struct Evaluation {
  double loss = 0.0;      // objective value
  double mean_nll = 0.0;  // data term only
  std::vector<double> row_nll;
  Matrix predictions;
  std::vector<Matrix> slot_values;  // constrained, rows x slot dim
};

/// Evaluates the objective on `batch`; fills `grads` when non-null. Dropout is
/// active only when `dropout` is given and the batch is a training batch.
Evaluation evaluate(const ObjectiveTerms& terms, const Batch& batch, JointGradients* grads = nullptr,
                    Rng* dropout = nullptr);

/// Mutable views of every trainable block in a fixed order: model weights,
/// each learnable slot store, then prior scales. Used by optimizers and by
/// finite-difference checks.
std::vector<std::span<double>> parameter_blocks(const ObjectiveTerms& terms);
/// The matching gradient blocks, same order as parameter_blocks.
std::vector<std::span<const double>> gradient_blocks(const ObjectiveTerms& terms,
                                                     const JointGradients& grads);

}  // namespace fulllik
