#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace fulllik {

enum class OptimizerKind { adam, sgd, rmsprop_sparse };

struct OptimizerSettings {
  OptimizerKind kind = OptimizerKind::adam;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.99;
  double epsilon = 1e-8;
  /// RMSProp second-moment decay.
  double decay = 0.9;
};

/// Per-block optimizer state. Sparse RMSProp only updates entries flagged in
/// `touched`; the moments of untouched entries are left alone.
class OptimizerState {
 public:
  OptimizerState() = default;
  OptimizerState(OptimizerSettings settings, std::size_t size);

  /// Applies one update. `touched` may be empty (= every entry touched).
  /// Throws Diverged on non-finite gradients.
  void step(std::span<double> params, std::span<const double> grads,
            std::span<const std::uint8_t> touched = {});

  const OptimizerSettings& settings() const { return settings_; }
  std::size_t steps_taken() const { return t_; }

 private:
  OptimizerSettings settings_;
  std::vector<double> m_;
  std::vector<double> v_;
  std::size_t t_ = 0;
};

}  // namespace fulllik
