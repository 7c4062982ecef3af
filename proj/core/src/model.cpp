#include "fulllik/model.hpp"

#include <atomic>
#include <cmath>

#include "fulllik/errors.hpp"
#include "fulllik/rng.hpp"

namespace fulllik {
namespace {

std::uint64_t next_generation() {
  static std::atomic<std::uint64_t> counter{1};
  return counter.fetch_add(1, std::memory_order_relaxed);
}

using ConstMap = Eigen::Map<const Matrix>;
using RowVectorMap = Eigen::Map<const Eigen::RowVectorXd>;

}  // namespace

Architecture Architecture::linear(std::size_t in, std::size_t out) {
  if (in == 0 || out == 0) throw InvalidArgument("linear model needs positive widths");
  Architecture a;
  a.kind = Kind::linear;
  a.input = in;
  a.output = out;
  return a;
}

Architecture Architecture::mlp(std::size_t in, std::vector<std::size_t> hidden, std::size_t out) {
  if (in == 0 || out == 0 || hidden.empty()) throw InvalidArgument("mlp needs widths and hidden layers");
  for (auto h : hidden)
    if (h == 0) throw InvalidArgument("hidden width must be positive");
  Architecture a;
  a.kind = Kind::mlp;
  a.input = in;
  a.output = out;
  a.hidden = std::move(hidden);
  return a;
}

Architecture Architecture::autoencoder(std::size_t in, std::size_t code, std::vector<std::size_t> hidden,
                                       double dropout) {
  if (code == 0 || code >= in) throw InvalidArgument("autoencoder code must satisfy 0 < code < input");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw InvalidArgument("dropout must lie in [0, 1)");
  Architecture a;
  a.kind = Kind::autoencoder;
  a.input = in;
  a.output = in;
  a.code = code;
  a.hidden = std::move(hidden);
  a.dropout = dropout;
  return a;
}

std::vector<LayerSpec> Architecture::layers() const {
  std::vector<LayerSpec> out;
  switch (kind) {
    case Kind::linear:
      out.push_back({input, output, Activation::identity, 0.0});
      break;
    case Kind::mlp: {
      std::size_t prev = input;
      for (auto h : hidden) {
        out.push_back({prev, h, Activation::relu, 0.0});
        prev = h;
      }
      out.push_back({prev, output, Activation::identity, 0.0});
      break;
    }
    case Kind::autoencoder: {
      std::size_t prev = input;
      for (auto h : hidden) {
        out.push_back({prev, h, Activation::relu, 0.0});
        prev = h;
      }
      // Dropout sits before the code layer (only meaningful with hidden layers).
      out.push_back({prev, code, Activation::identity, hidden.empty() ? 0.0 : dropout});
      prev = code;
      for (auto it = hidden.rbegin(); it != hidden.rend(); ++it) {
        out.push_back({prev, *it, Activation::relu, 0.0});
        prev = *it;
      }
      out.push_back({prev, output, Activation::identity, 0.0});
      break;
    }
  }
  return out;
}

std::size_t Architecture::num_weights() const {
  std::size_t n = 0;
  for (const auto& l : layers()) n += l.in * l.out + l.out;
  return n;
}

std::string Architecture::describe() const {
  std::string s;
  switch (kind) {
    case Kind::linear: s = "linear(" + std::to_string(input) + "->" + std::to_string(output); break;
    case Kind::mlp: s = "mlp(" + std::to_string(input); break;
    case Kind::autoencoder: s = "autoencoder(" + std::to_string(input) + ",code=" + std::to_string(code); break;
  }
  if (kind != Kind::linear) {
    s += ",hidden=[";
    for (std::size_t i = 0; i < hidden.size(); ++i) s += (i ? "," : "") + std::to_string(hidden[i]);
    s += "]";
    if (kind == Kind::mlp) s += "->" + std::to_string(output);
  }
  return s + ")";
}

Model::Model(Architecture arch, std::vector<double> weights)
    : arch_(std::move(arch)), layers_(arch_.layers()), weights_(std::move(weights)),
      generation_(next_generation()) {
  std::size_t off = 0;
  for (const auto& l : layers_) {
    offsets_.push_back(off);
    off += l.in * l.out + l.out;
  }
  if (off != weights_.size()) throw InvalidArgument("weight count does not match architecture");
  for (double w : weights_)
    if (!std::isfinite(w)) throw InvalidArgument("non-finite weight");
}

Model::Model(Architecture arch, InitScheme scheme, std::uint64_t seed)
    : Model(arch, std::vector<double>(arch.num_weights(), 0.0)) {
  Rng rng(seed, "model/init");
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    const auto& l = layers_[k];
    double* w = weights_.data() + offsets_[k];
    const auto fan_in = static_cast<double>(l.in);
    const auto fan_out = static_cast<double>(l.out);
    for (std::size_t i = 0; i < l.in * l.out; ++i) {
      if (scheme == InitScheme::glorot_uniform) {
        const double limit = std::sqrt(6.0 / (fan_in + fan_out));
        w[i] = rng.uniform(-limit, limit);
      } else {
        w[i] = std::sqrt(2.0 / fan_in) * rng.normal();
      }
    }
  }
}

std::span<double> Model::mutable_weights() {
  generation_ = next_generation();
  return weights_;
}

void Model::set_weights(std::span<const double> w) {
  if (w.size() != weights_.size()) throw InvalidArgument("weight count mismatch");
  generation_ = next_generation();
  std::copy(w.begin(), w.end(), weights_.begin());
}

std::size_t Model::representation_width() const { return layers_.back().in; }

std::vector<std::uint8_t> Model::bias_mask() const {
  std::vector<std::uint8_t> mask(weights_.size(), 0);
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    const auto start = offsets_[k] + layers_[k].in * layers_[k].out;
    for (std::size_t j = 0; j < layers_[k].out; ++j) mask[start + j] = 1;
  }
  return mask;
}

Matrix Model::forward(const Matrix& x, Cache* cache, Rng* dropout_rng) const {
  if (static_cast<std::size_t>(x.cols()) != arch_.input)
    throw InvalidArgument("input width " + std::to_string(x.cols()) + " does not match model input " +
                          std::to_string(arch_.input));
  if (cache) {
    cache->owner = this;
    cache->generation = generation_;
    cache->inputs.clear();
    cache->pre.clear();
    cache->masks.clear();
  }
  Matrix a = x;
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    const auto& l = layers_[k];
    Matrix mask;
    if (dropout_rng && l.dropout_before > 0.0) {
      const double keep = 1.0 - l.dropout_before;
      mask.resize(a.rows(), a.cols());
      for (Eigen::Index i = 0; i < mask.size(); ++i)
        mask.data()[i] = dropout_rng->uniform() < keep ? 1.0 / keep : 0.0;
      a = a.cwiseProduct(mask);
    }
    const ConstMap w(weights_.data() + offsets_[k], static_cast<Eigen::Index>(l.in),
                     static_cast<Eigen::Index>(l.out));
    const RowVectorMap b(weights_.data() + offsets_[k] + l.in * l.out, static_cast<Eigen::Index>(l.out));
    Matrix z = a * w;
    z.rowwise() += b;
    if (cache) {
      cache->inputs.push_back(a);
      cache->pre.push_back(z);
      cache->masks.push_back(std::move(mask));
    }
    a = l.activation == Activation::relu ? Matrix(z.cwiseMax(0.0)) : std::move(z);
  }
  return a;
}

Model::Gradients Model::backward(const Cache& cache, const Matrix& upstream,
                                 const Matrix* representation_upstream) const {
  if (cache.owner != this || cache.generation != generation_ || cache.inputs.size() != layers_.size())
    throw InvalidState("stale or foreign forward cache");
  const Eigen::Index batch = cache.inputs.front().rows();
  if (upstream.rows() != batch || static_cast<std::size_t>(upstream.cols()) != arch_.output)
    throw InvalidArgument("upstream gradient shape mismatch");
  if (representation_upstream &&
      (representation_upstream->rows() != batch ||
       static_cast<std::size_t>(representation_upstream->cols()) != representation_width()))
    throw InvalidArgument("representation gradient shape mismatch");

  Gradients g;
  g.weights.assign(weights_.size(), 0.0);
  Matrix d = upstream;
  for (std::size_t kk = layers_.size(); kk-- > 0;) {
    const auto& l = layers_[kk];
    if (l.activation == Activation::relu)
      d = d.cwiseProduct((cache.pre[kk].array() > 0.0).cast<double>().matrix());
    Eigen::Map<Matrix> dw(g.weights.data() + offsets_[kk], static_cast<Eigen::Index>(l.in),
                          static_cast<Eigen::Index>(l.out));
    Eigen::Map<Eigen::RowVectorXd> db(g.weights.data() + offsets_[kk] + l.in * l.out,
                                      static_cast<Eigen::Index>(l.out));
    dw.noalias() = cache.inputs[kk].transpose() * d;
    db = d.colwise().sum();
    const ConstMap w(weights_.data() + offsets_[kk], static_cast<Eigen::Index>(l.in),
                     static_cast<Eigen::Index>(l.out));
    Matrix d_in = d * w.transpose();
    if (kk + 1 == layers_.size() && representation_upstream) d_in += *representation_upstream;
    if (cache.masks[kk].size() > 0) d_in = d_in.cwiseProduct(cache.masks[kk]);
    d = std::move(d_in);
  }
  g.inputs = std::move(d);
  return g;
}

}  // namespace fulllik
