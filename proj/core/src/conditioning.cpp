#include "fulllik/conditioning.hpp"

#include <cmath>

#include "fulllik/errors.hpp"

namespace fulllik {

const char* to_string(ProviderKind kind) {
  switch (kind) {
    case ProviderKind::global: return "global";
    case ProviderKind::data: return "data";
    case ProviderKind::predicted: return "predicted";
  }
  return "?";
}

std::size_t ParamRequest::rows() const {
  if (!indices.empty()) return indices.size();
  if (features) return static_cast<std::size_t>(features->rows());
  return batch;
}

ParamProvider ParamProvider::global(std::size_t dim, TransformSpec transform, double init_value) {
  if (dim == 0) throw InvalidArgument("provider dim must be >= 1");
  ParamProvider p;
  p.kind_ = ProviderKind::global;
  p.dim_ = dim;
  p.transform_ = transform;
  p.store_.assign(dim, inverse(transform, init_value));
  return p;
}

ParamProvider ParamProvider::data(std::size_t n, std::size_t dim, TransformSpec transform, double init_value) {
  if (dim == 0) throw InvalidArgument("provider dim must be >= 1");
  if (n == 0) throw InvalidArgument("data provider needs the training-set size");
  ParamProvider p;
  p.kind_ = ProviderKind::data;
  p.dim_ = dim;
  p.n_ = n;
  p.transform_ = transform;
  p.store_.assign(n * dim, inverse(transform, init_value));
  return p;
}

ParamProvider ParamProvider::predicted(const Architecture& head, bool isolated, TransformSpec transform,
                                       double init_value, std::uint64_t seed, bool standardize_inputs) {
  if (head.kind == Architecture::Kind::autoencoder)
    throw InvalidArgument("parameter heads must be linear or mlp");
  const double bias = inverse(transform, init_value);
  ParamProvider p;
  p.kind_ = ProviderKind::predicted;
  p.dim_ = head.output;
  p.transform_ = transform;
  p.isolated_ = isolated;
  p.standardize_ = standardize_inputs;
  Model m(head, InitScheme::glorot_uniform, seed);
  auto w = m.mutable_weights();
  const auto layers = head.layers();
  const auto& last = layers.back();
  const std::size_t last_offset = w.size() - (last.in * last.out + last.out);
  for (std::size_t i = last_offset; i < w.size(); ++i)
    w[i] = i >= last_offset + last.in * last.out ? bias : 0.0;
  p.head_ = std::move(m);
  p.input_mean_.assign(head.input, 0.0);
  p.input_scale_.assign(head.input, 1.0);
  return p;
}

std::span<const double> ParamProvider::store() const {
  return kind_ == ProviderKind::predicted ? head_.weights() : std::span<const double>(store_);
}

std::span<double> ParamProvider::mutable_store() {
  return kind_ == ProviderKind::predicted ? head_.mutable_weights() : std::span<double>(store_);
}

void ParamProvider::fit_standardizer(const Matrix& features) {
  if (kind_ != ProviderKind::predicted) throw InvalidState("only predicted providers standardize inputs");
  if (static_cast<std::size_t>(features.cols()) != head_.input_width())
    throw InvalidArgument("head input width mismatch");
  if (!standardize_) return;
  const auto n = static_cast<double>(features.rows());
  for (Eigen::Index c = 0; c < features.cols(); ++c) {
    const double mean = features.col(c).sum() / n;
    const double var = (features.col(c).array() - mean).square().sum() / n;
    input_mean_[static_cast<std::size_t>(c)] = mean;
    input_scale_[static_cast<std::size_t>(c)] = var > 1e-24 ? std::sqrt(var) : 1.0;
  }
}

void ParamProvider::tie_all_rows() {
  if (kind_ != ProviderKind::data) throw InvalidState("only data providers can tie rows");
  tied_ = true;
  store_.resize(dim_);
}

std::size_t ParamProvider::parameter_count() const { return store().size(); }

std::string ParamProvider::space_class() const {
  switch (kind_) {
    case ProviderKind::global: return "O(p)";
    case ProviderKind::data: return "O(pn)";
    case ProviderKind::predicted: return "O(pd)";
  }
  return "?";
}

std::string ParamProvider::time_class() const {
  switch (kind_) {
    case ProviderKind::global: return "O(pg)";
    case ProviderKind::data: return "O(p(f+g+s))";
    case ProviderKind::predicted: return "O(pd(f+g))";
  }
  return "?";
}

std::size_t ParamProvider::storage_row(std::size_t index) const {
  if (index >= n_) throw InvalidArgument("data index " + std::to_string(index) + " out of range");
  return tied_ ? 0 : index;
}

Matrix ParamProvider::head_input(const Matrix& features) const {
  Matrix x = features;
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    const auto k = static_cast<std::size_t>(c);
    x.col(c) = (x.col(c).array() - input_mean_[k]) / input_scale_[k];
  }
  return x;
}

void ParamProvider::check_request(const ParamRequest& req) const {
  if (kind_ == ProviderKind::data) {
    if (req.inference) throw UnsupportedAtInference("data parameters are undefined outside training");
    if (req.indices.empty()) throw UnsupportedAtInference("data parameters require training indices");
  }
  if (kind_ == ProviderKind::predicted && !req.features)
    throw InvalidArgument("predicted parameters require head input features");
}

Matrix ParamProvider::get_params(const ParamRequest& req) const {
  check_request(req);
  const auto d = static_cast<Eigen::Index>(dim_);
  switch (kind_) {
    case ProviderKind::global: {
      Matrix out(static_cast<Eigen::Index>(req.rows()), d);
      for (Eigen::Index j = 0; j < d; ++j) out.col(j).setConstant(forward(transform_, store_[static_cast<std::size_t>(j)]));
      return out;
    }
    case ProviderKind::data: {
      Matrix out(static_cast<Eigen::Index>(req.indices.size()), d);
      for (std::size_t i = 0; i < req.indices.size(); ++i) {
        const auto row = storage_row(req.indices[i]);
        for (std::size_t j = 0; j < dim_; ++j)
          out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = forward(transform_, store_[row * dim_ + j]);
      }
      return out;
    }
    case ProviderKind::predicted: {
      Matrix u = head_.forward(head_input(*req.features));
      return u.unaryExpr([this](double v) { return forward(transform_, v); });
    }
  }
  return {};
}

ParamGradients ParamProvider::accumulate_grads(const ParamRequest& req, const Matrix& upstream) const {
  check_request(req);
  if (static_cast<std::size_t>(upstream.rows()) != req.rows() || static_cast<std::size_t>(upstream.cols()) != dim_)
    throw InvalidArgument("upstream gradient shape does not match the provider output");
  ParamGradients g;
  g.store.assign(store().size(), 0.0);
  switch (kind_) {
    case ProviderKind::global:
      for (std::size_t j = 0; j < dim_; ++j)
        g.store[j] = upstream.col(static_cast<Eigen::Index>(j)).sum() * forward_grad(transform_, store_[j]);
      break;
    case ProviderKind::data:
      g.touched.assign(store_.size(), 0);
      for (std::size_t i = 0; i < req.indices.size(); ++i) {
        const auto row = storage_row(req.indices[i]);
        for (std::size_t j = 0; j < dim_; ++j) {
          const auto k = row * dim_ + j;
          g.store[k] += upstream(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) *
                        forward_grad(transform_, store_[k]);
          g.touched[k] = 1;
        }
      }
      break;
    case ProviderKind::predicted: {
      Model::Cache cache;
      const Matrix u = head_.forward(head_input(*req.features), &cache);
      const Matrix du = upstream.cwiseProduct(u.unaryExpr([this](double v) { return forward_grad(transform_, v); }));
      auto back = head_.backward(cache, du);
      g.store = std::move(back.weights);
      if (isolated_) {
        g.features = Matrix::Zero(req.features->rows(), req.features->cols());
      } else {
        g.features = std::move(back.inputs);
        for (Eigen::Index c = 0; c < g.features.cols(); ++c)
          g.features.col(c) /= input_scale_[static_cast<std::size_t>(c)];
      }
      break;
    }
  }
  return g;
}

}  // namespace fulllik
