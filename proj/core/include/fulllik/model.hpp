#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fulllik/dataset.hpp"

namespace fulllik {

class Rng;

enum class Activation { identity, relu };
enum class InitScheme { glorot_uniform, he };

struct LayerSpec {
  std::size_t in = 0;
  std::size_t out = 0;
  Activation activation = Activation::identity;
  double dropout_before = 0.0;
};

/// Predictor architectures: a linear map, a ReLU MLP, or an autoencoder
/// (encoder hidden layers, dropout, linear code, mirrored decoder). An
/// autoencoder without hidden layers is a linear autoencoder.
struct Architecture {
  enum class Kind { linear, mlp, autoencoder };

  Kind kind = Kind::linear;
  std::size_t input = 0;
  std::size_t output = 0;
  std::vector<std::size_t> hidden;
  std::size_t code = 0;
  double dropout = 0.0;

  static Architecture linear(std::size_t in, std::size_t out);
  static Architecture mlp(std::size_t in, std::vector<std::size_t> hidden, std::size_t out);
  static Architecture autoencoder(std::size_t in, std::size_t code,
                                  std::vector<std::size_t> hidden = {}, double dropout = 0.0);

  std::vector<LayerSpec> layers() const;
  std::size_t num_weights() const;
  std::string describe() const;
};

/// A differentiable predictor owning its flat weight vector. Each layer stores
/// W (in x out, row-major) followed by its bias (out). Any mutable access to
/// the weights bumps a generation counter, invalidating outstanding caches.
class Model {
 public:
  struct Cache {
    const Model* owner = nullptr;
    std::uint64_t generation = 0;
    std::vector<Matrix> inputs;  // input of each layer, after dropout
    std::vector<Matrix> pre;     // pre-activation of each layer
    std::vector<Matrix> masks;   // scaled dropout masks (empty when inactive)
  };

  struct Gradients {
    std::vector<double> weights;
    Matrix inputs;
  };

  Model() = default;
  Model(Architecture arch, InitScheme scheme, std::uint64_t seed);
  Model(Architecture arch, std::vector<double> weights);

  const Architecture& architecture() const { return arch_; }
  std::span<const double> weights() const { return weights_; }
  std::span<double> mutable_weights();
  void set_weights(std::span<const double> w);
  std::size_t num_weights() const { return weights_.size(); }
  std::size_t input_width() const { return arch_.input; }
  std::size_t output_width() const { return arch_.output; }
  /// Width of the input to the final layer (the penultimate representation).
  std::size_t representation_width() const;
  /// 1 for bias entries, 0 for multiplicative weights.
  std::vector<std::uint8_t> bias_mask() const;
  std::uint64_t generation() const { return generation_; }

  /// Forward pass. Dropout is active only when `dropout_rng` is given.
  Matrix forward(const Matrix& x, Cache* cache = nullptr, Rng* dropout_rng = nullptr) const;

  /// Reverse pass for d-loss/d-output `upstream`. An optional upstream on the
  /// penultimate representation (e.g. from a likelihood head fed by it) is
  /// accumulated too.
  Gradients backward(const Cache& cache, const Matrix& upstream,
                     const Matrix* representation_upstream = nullptr) const;

  /// The penultimate representation captured by a forward pass.
  static const Matrix& representation(const Cache& cache) { return cache.inputs.back(); }

 private:
  Architecture arch_;
  std::vector<LayerSpec> layers_;
  std::vector<std::size_t> offsets_;
  std::vector<double> weights_;
  std::uint64_t generation_ = 0;
};

}  // namespace fulllik
