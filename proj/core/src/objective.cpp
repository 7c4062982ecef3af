#include "fulllik/objective.hpp"

#include <cmath>
#include <numeric>

#include "fulllik/errors.hpp"
#include "fulllik/likelihood.hpp"
#include "fulllik/rng.hpp"

namespace fulllik {

const char* to_string(Family f) {
  switch (f) {
    case Family::normal: return "normal";
    case Family::laplace: return "laplace";
    case Family::softmax: return "softmax";
    case Family::robust: return "robust";
  }
  return "?";
}

const char* to_string(Task t) {
  switch (t) {
    case Task::regression: return "regression";
    case Task::classification: return "classification";
    case Task::reconstruction: return "reconstruction";
  }
  return "?";
}

const char* to_string(HeadInput h) {
  switch (h) {
    case HeadInput::features: return "features";
    case HeadInput::representation: return "representation";
    case HeadInput::side: return "side";
  }
  return "?";
}

Family parse_family(std::string_view s) {
  if (s == "normal") return Family::normal;
  if (s == "laplace") return Family::laplace;
  if (s == "softmax") return Family::softmax;
  if (s == "robust") return Family::robust;
  throw InvalidArgument("unknown likelihood family '" + std::string(s) + "'");
}

void LikelihoodSlot::freeze(double value) {
  if (!std::isfinite(value)) throw InvalidArgument("fixed value for slot '" + name + "' must be finite");
  fixed_value = value;
  provider.reset();
}

void LikelihoodSlot::make_global(double init, std::size_t dim) {
  provider = ParamProvider::global(dim, transform, init);
}

void LikelihoodSlot::make_data(std::size_t n, double init, std::size_t dim) {
  provider = ParamProvider::data(n, dim, transform, init);
}

void LikelihoodSlot::make_predicted(const Architecture& head, bool isolated, double init, std::uint64_t seed,
                                    HeadInput input, bool standardize_inputs) {
  provider = ParamProvider::predicted(head, isolated, transform, init, seed, standardize_inputs);
  head_input = input;
}

LikelihoodSpec LikelihoodSpec::make(Family family) {
  LikelihoodSpec spec;
  spec.family = family;
  switch (family) {
    case Family::normal: spec.slots.push_back({"sigma", transforms::variance(), 1.0, {}, {}}); break;
    case Family::laplace: spec.slots.push_back({"b", transforms::variance(), 1.0, {}, {}}); break;
    case Family::softmax: spec.slots.push_back({"tau", transforms::temperature(), 1.0, {}, {}}); break;
    case Family::robust:
      spec.slots.push_back({"alpha", transforms::robust_shape(), 1.0, {}, {}});
      spec.slots.push_back({"sigma", transforms::robust_scale(), 1.0, {}, {}});
      break;
  }
  return spec;
}

LikelihoodSlot& LikelihoodSpec::slot(std::string_view name) {
  for (auto& s : slots)
    if (s.name == name) return s;
  throw InvalidArgument("likelihood '" + std::string(to_string(family)) + "' has no slot '" + std::string(name) + "'");
}

const LikelihoodSlot& LikelihoodSpec::slot(std::string_view name) const {
  return const_cast<LikelihoodSpec*>(this)->slot(name);
}

bool LikelihoodSpec::has_data_provider() const {
  for (const auto& s : slots)
    if (s.provider && s.provider->kind() == ProviderKind::data) return true;
  return false;
}

std::size_t LikelihoodSpec::parameter_count() const {
  std::size_t n = 0;
  for (const auto& s : slots)
    if (s.provider) n += s.provider->parameter_count();
  return n;
}

Task infer_task(Family family, const Model* model, const Dataset& data) {
  if (family == Family::softmax) return Task::classification;
  if (model && model->architecture().kind == Architecture::Kind::autoencoder) return Task::reconstruction;
  return data.target_kind == TargetKind::real ? Task::regression : Task::reconstruction;
}

double JointGradients::squared_norm() const {
  double s = 0.0;
  for (double g : model) s += g * g;
  for (const auto& v : slots)
    for (double g : v) s += g * g;
  for (double g : prior) s += g * g;
  return s;
}

void JointGradients::scale(double factor) {
  for (double& g : model) g *= factor;
  for (auto& v : slots)
    for (double& g : v) g *= factor;
  for (double& g : prior) g *= factor;
}

bool JointGradients::finite() const { return std::isfinite(squared_norm()); }

namespace {

Matrix gather(const Matrix& m, std::span<const std::size_t> rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= static_cast<std::size_t>(m.rows())) throw InvalidArgument("batch row out of range");
    out.row(static_cast<Eigen::Index>(i)) = m.row(static_cast<Eigen::Index>(rows[i]));
  }
  return out;
}

// Column of a slot value matrix used for output coordinate j.
inline double slot_at(const Matrix& v, Eigen::Index i, Eigen::Index j) { return v(i, v.cols() == 1 ? 0 : j); }
inline double& slot_ref(Matrix& v, Eigen::Index i, Eigen::Index j) { return v(i, v.cols() == 1 ? 0 : j); }

}  // namespace

Evaluation evaluate(const ObjectiveTerms& terms, const Batch& batch, JointGradients* grads, Rng* dropout) {
  if (!terms.likelihood || !batch.data) throw InvalidArgument("objective needs a likelihood and data");
  const Dataset& ds = *batch.data;
  LikelihoodSpec& lik = *terms.likelihood;

  std::vector<std::size_t> all_rows;
  std::span<const std::size_t> rows = batch.rows;
  if (rows.empty()) {
    all_rows.resize(ds.rows());
    std::iota(all_rows.begin(), all_rows.end(), std::size_t{0});
    rows = all_rows;
  }
  const auto B = static_cast<Eigen::Index>(rows.size());
  if (B == 0) throw InvalidArgument("empty batch");
  const double inv_b = 1.0 / static_cast<double>(B);

  const Matrix x = gather(ds.features, rows);
  bool wants_rep = false;
  for (const auto& s : lik.slots) wants_rep |= s.provider && s.head_input == HeadInput::representation;

  Evaluation ev;
  Model::Cache cache;
  Rng* drop = batch.training ? dropout : nullptr;
  if (terms.model) {
    ev.predictions = terms.model->forward(x, (grads || wants_rep) ? &cache : nullptr, drop);
  } else {
    ev.predictions = x;
  }
  const Matrix& pred = ev.predictions;
  const Matrix& rep = terms.model && (grads || wants_rep) ? Model::representation(cache) : x;
  const Eigen::Index out = pred.cols();

  // Targets.
  Matrix target;
  std::vector<int> labels;
  switch (terms.task) {
    case Task::regression:
      if (ds.target_kind != TargetKind::real) throw InvalidArgument("regression needs real targets");
      if (out != 1) throw InvalidArgument("regression predictions must have one column");
      target.resize(B, 1);
      for (Eigen::Index i = 0; i < B; ++i) target(i, 0) = ds.targets[rows[static_cast<std::size_t>(i)]];
      break;
    case Task::classification:
      if (ds.target_kind != TargetKind::classes) throw InvalidArgument("classification needs class labels");
      labels.resize(rows.size());
      for (std::size_t i = 0; i < rows.size(); ++i) {
        labels[i] = ds.labels[rows[i]];
        if (labels[i] < 0 || labels[i] >= out) throw InvalidArgument("class label outside the logit width");
      }
      break;
    case Task::reconstruction:
      if (out != x.cols()) throw InvalidArgument("reconstruction width must match the input");
      target = x;
      break;
  }
  if ((terms.task == Task::classification) != (lik.family == Family::softmax))
    throw InvalidArgument("softmax likelihood goes with classification only");

  // Slot values.
  const std::size_t n_slots = lik.slots.size();
  std::vector<Matrix> side_rows(n_slots);
  std::vector<ParamRequest> requests(n_slots);
  ev.slot_values.resize(n_slots);
  for (std::size_t s = 0; s < n_slots; ++s) {
    auto& slot = lik.slots[s];
    if (!slot.provider) {
      ev.slot_values[s] = Matrix::Constant(B, 1, slot.fixed_value);
      continue;
    }
    ParamRequest& req = requests[s];
    req.indices = rows;
    req.batch = rows.size();
    req.inference = !batch.training;
    switch (slot.head_input) {
      case HeadInput::features: req.features = &x; break;
      case HeadInput::representation: req.features = &rep; break;
      case HeadInput::side:
        if (!batch.side) throw InvalidArgument("slot '" + slot.name + "' reads a side matrix but none was given");
        side_rows[s] = gather(*batch.side, rows);
        req.features = &side_rows[s];
        break;
    }
    if (slot.provider->kind() != ProviderKind::predicted) req.features = nullptr;
    ev.slot_values[s] = slot.provider->get_params(req);
    const auto dim = ev.slot_values[s].cols();
    if (dim != 1 && (dim != out || lik.family == Family::softmax))
      throw InvalidArgument("slot '" + slot.name + "' dimension must be 1 or the output width");
  }

  // Data term.
  Matrix d_pred = Matrix::Zero(B, out);
  std::vector<Matrix> d_slot(n_slots);
  for (std::size_t s = 0; s < n_slots; ++s) d_slot[s] = Matrix::Zero(B, ev.slot_values[s].cols());
  ev.row_nll.assign(rows.size(), 0.0);
  const bool g = grads != nullptr;

  for (Eigen::Index i = 0; i < B; ++i) {
    double nll = 0.0;
    switch (lik.family) {
      case Family::normal:
        for (Eigen::Index j = 0; j < out; ++j) {
          const double r = pred(i, j) - target(i, j);
          const NormalParams p{slot_at(ev.slot_values[0], i, j)};
          nll += normal_nll(r, p);
          if (g) {
            const auto gr = normal_nll_grads(r, p);
            d_pred(i, j) = gr.d_residual * inv_b;
            slot_ref(d_slot[0], i, j) += gr.d_sigma * inv_b;
          }
        }
        break;
      case Family::laplace:
        for (Eigen::Index j = 0; j < out; ++j) {
          const double r = pred(i, j) - target(i, j);
          const LaplaceParams p{slot_at(ev.slot_values[0], i, j)};
          nll += laplace_nll(r, p);
          if (g) {
            const auto gr = laplace_nll_grads(r, p);
            d_pred(i, j) = gr.d_residual * inv_b;
            slot_ref(d_slot[0], i, j) += gr.d_b * inv_b;
          }
        }
        break;
      case Family::robust:
        for (Eigen::Index j = 0; j < out; ++j) {
          const double r = pred(i, j) - target(i, j);
          const RobustParams p{slot_at(ev.slot_values[0], i, j), slot_at(ev.slot_values[1], i, j)};
          nll += robust_nll(r, p);
          if (g) {
            const auto gr = robust_nll_grads(r, p);
            d_pred(i, j) = gr.d_residual * inv_b;
            slot_ref(d_slot[0], i, j) += gr.d_alpha * inv_b;
            slot_ref(d_slot[1], i, j) += gr.d_sigma * inv_b;
          }
        }
        break;
      case Family::softmax: {
        const std::span<const double> logits(pred.data() + i * out, static_cast<std::size_t>(out));
        const SoftmaxParams p{ev.slot_values[0](i, 0)};
        const auto y = static_cast<std::size_t>(labels[static_cast<std::size_t>(i)]);
        nll = softmax_nll(logits, p, y);
        if (g) {
          const auto gr = softmax_nll_grads(logits, p, y);
          for (Eigen::Index j = 0; j < out; ++j) d_pred(i, j) = gr.d_logits[static_cast<std::size_t>(j)] * inv_b;
          d_slot[0](i, 0) = gr.d_tau * inv_b;
        }
        break;
      }
    }
    ev.row_nll[static_cast<std::size_t>(i)] = nll;
  }
  double total = 0.0;
  for (double v : ev.row_nll) total += v;
  ev.mean_nll = total * inv_b;
  ev.loss = ev.mean_nll;

  if (g) {
    grads->model.assign(terms.model ? terms.model->num_weights() : 0, 0.0);
    grads->slots.assign(n_slots, {});
    grads->touched.assign(n_slots, {});
    grads->prior.clear();
    Matrix rep_upstream;
    bool rep_used = false;
    for (std::size_t s = 0; s < n_slots; ++s) {
      auto& slot = lik.slots[s];
      if (!slot.provider) continue;
      auto pg = slot.provider->accumulate_grads(requests[s], d_slot[s]);
      if (slot.head_input == HeadInput::representation && terms.model && pg.features.size() > 0) {
        if (!rep_used) rep_upstream = Matrix::Zero(rep.rows(), rep.cols());
        rep_upstream += pg.features;
        rep_used = true;
      }
      grads->slots[s] = std::move(pg.store);
      grads->touched[s] = std::move(pg.touched);
    }
    if (terms.model) {
      auto back = terms.model->backward(cache, d_pred, rep_used ? &rep_upstream : nullptr);
      grads->model = std::move(back.weights);
    }
  }

  if (terms.prior) {
    if (!terms.model) throw InvalidArgument("a weight prior needs a model");
    const auto theta = terms.model->weights();
    ev.loss += terms.prior_weight * terms.prior->nll(theta);
    if (g) {
      auto pg = terms.prior->grads(theta);
      for (std::size_t k = 0; k < pg.theta.size(); ++k) grads->model[k] += terms.prior_weight * pg.theta[k];
      grads->prior = std::move(pg.scales);
      for (double& v : grads->prior) v *= terms.prior_weight;
    }
  }
  if (terms.weight_decay > 0.0 && terms.model) {
    const auto theta = terms.model->weights();
    double sq = 0.0;
    for (std::size_t k = 0; k < theta.size(); ++k) {
      sq += theta[k] * theta[k];
      if (g) grads->model[k] += terms.weight_decay * theta[k];
    }
    ev.loss += 0.5 * terms.weight_decay * sq;
  }
  if (terms.likelihood_decay > 0.0) {
    for (std::size_t s = 0; s < n_slots; ++s) {
      if (!lik.slots[s].provider) continue;
      const auto store = lik.slots[s].provider->store();
      double sq = 0.0;
      for (std::size_t k = 0; k < store.size(); ++k) {
        sq += store[k] * store[k];
        if (g) grads->slots[s][k] += terms.likelihood_decay * store[k];
      }
      ev.loss += 0.5 * terms.likelihood_decay * sq;
    }
  }
  return ev;
}

std::vector<std::span<double>> parameter_blocks(const ObjectiveTerms& terms) {
  std::vector<std::span<double>> blocks;
  blocks.push_back(terms.model ? terms.model->mutable_weights() : std::span<double>{});
  for (auto& s : terms.likelihood->slots)
    blocks.push_back(s.provider ? s.provider->mutable_store() : std::span<double>{});
  blocks.push_back(terms.prior ? terms.prior->mutable_store() : std::span<double>{});
  return blocks;
}

std::vector<std::span<const double>> gradient_blocks(const ObjectiveTerms& terms, const JointGradients& grads) {
  std::vector<std::span<const double>> blocks;
  blocks.push_back(grads.model);
  for (std::size_t s = 0; s < terms.likelihood->slots.size(); ++s)
    blocks.push_back(s < grads.slots.size() ? std::span<const double>(grads.slots[s]) : std::span<const double>{});
  blocks.push_back(grads.prior);
  return blocks;
}

}  // namespace fulllik
