#pragma once

// The joint training loop over model weights, likelihood parameters, and
// optional prior scales.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fulllik/objective.hpp"
#include "fulllik/optimizer.hpp"

namespace fulllik {

struct FitConfig {
  /// Settings for the model block. Likelihood blocks reuse the kind and betas
  /// with lr * likelihood_lr_multiplier.
  OptimizerSettings optimizer;
  std::size_t steps = 3000;
  std::size_t batch_size = 0;  // 0 = full batch
  /// Clip on the global norm of the concatenated gradient; +inf disables.
  double clip_norm = 1.0;
  double likelihood_lr_multiplier = 0.1;
  /// Prior-scale lr multiplier; defaults to likelihood_lr_multiplier.
  std::optional<double> prior_lr_multiplier;
  /// Data-conditioned stores use their own optimizer (sparse RMSProp).
  OptimizerKind data_optimizer = OptimizerKind::rmsprop_sparse;
  /// Data-store lr; defaults to lr * likelihood_lr_multiplier.
  std::optional<double> data_lr;
  double weight_decay = 0.0;
  double likelihood_decay = 0.0;
  std::uint64_t seed = 0;
  /// False keeps the model weights frozen (likelihood/prior blocks still move).
  bool train_model = true;
  /// Record the loss every this many steps.
  std::size_t trajectory_stride = 1;

  void validate() const;
};

struct SlotReport {
  std::string name;
  std::string conditioning;  // "fixed", "global", "data", "predicted"
  std::size_t parameters = 0;
  std::string space;
  std::string time;
  double mean = 0.0;  // constrained value statistics over the training rows
  double min = 0.0;
  double max = 0.0;
};

struct FitReport {
  std::uint64_t seed = 0;
  std::size_t steps = 0;
  Task task = Task::regression;
  Family family = Family::normal;
  std::vector<double> trajectory;
  std::size_t trajectory_stride = 1;
  double final_loss = 0.0;
  double train_nll = 0.0;
  std::optional<double> test_nll;
  std::optional<double> train_mse;
  std::optional<double> test_mse;
  std::optional<double> train_accuracy;
  std::optional<double> test_accuracy;
  std::size_t model_parameters = 0;
  std::size_t likelihood_parameters = 0;
  std::size_t prior_parameters = 0;
  std::vector<SlotReport> slots;
  std::vector<double> effective_lambda;
  std::optional<double> prior_nll;
  std::optional<double> prior_raw_nll;
  double wall_seconds = 0.0;
};

struct FitProblem {
  Model* model = nullptr;  // may be null: predictions are the input features
  LikelihoodSpec* likelihood = nullptr;
  PriorSpec* prior = nullptr;
  const Dataset* train = nullptr;
  const Dataset* test = nullptr;
  const Matrix* train_side = nullptr;
  const Matrix* test_side = nullptr;
  std::optional<Task> task;  // inferred when empty
};

/// Runs cfg.steps optimizer steps. Throws Diverged on a non-finite loss or
/// gradient. Reproducible from cfg.seed.
FitReport fit(FitProblem& problem, const FitConfig& cfg);

FitReport fit(Model& model, LikelihoodSpec& likelihood, const Dataset& train, const FitConfig& cfg,
              const Dataset* test = nullptr, PriorSpec* prior = nullptr);

/// Objective terms matching a problem (used by fit and by gradient checks).
ObjectiveTerms make_terms(const FitProblem& problem, const FitConfig& cfg);

/// Prediction-only pass (no dropout, no likelihood parameters).
Matrix predict(const Model* model, const Matrix& features);

}  // namespace fulllik
