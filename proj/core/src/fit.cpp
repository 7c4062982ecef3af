#include "fulllik/fit.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

#include "fulllik/errors.hpp"
#include "fulllik/rng.hpp"

namespace fulllik {

void FitConfig::validate() const {
  if (!(optimizer.lr > 0.0)) throw InvalidArgument("learning rate must be positive");
  if (steps == 0) throw InvalidArgument("steps must be >= 1");
  if (!(clip_norm > 0.0)) throw InvalidArgument("clip norm must be positive");
  if (!(likelihood_lr_multiplier > 0.0)) throw InvalidArgument("likelihood lr multiplier must be positive");
  if (prior_lr_multiplier && !(*prior_lr_multiplier > 0.0)) throw InvalidArgument("prior lr multiplier must be positive");
  if (data_lr && !(*data_lr > 0.0)) throw InvalidArgument("data lr must be positive");
  if (weight_decay < 0.0 || likelihood_decay < 0.0) throw InvalidArgument("decay must be non-negative");
  if (trajectory_stride == 0) throw InvalidArgument("trajectory stride must be >= 1");
}

ObjectiveTerms make_terms(const FitProblem& problem, const FitConfig& cfg) {
  if (!problem.likelihood || !problem.train) throw InvalidArgument("fit needs a likelihood and training data");
  if (problem.train->rows() == 0) throw InvalidArgument("empty training set");
  ObjectiveTerms t;
  t.model = problem.model;
  t.likelihood = problem.likelihood;
  t.prior = problem.prior;
  t.task = problem.task.value_or(infer_task(problem.likelihood->family, problem.model, *problem.train));
  t.prior_weight = 1.0 / static_cast<double>(problem.train->rows());
  t.weight_decay = cfg.weight_decay;
  t.likelihood_decay = cfg.likelihood_decay;
  return t;
}

Matrix predict(const Model* model, const Matrix& features) { return model ? model->forward(features) : features; }

namespace {

void fit_head_standardizers(const FitProblem& pb) {
  for (auto& slot : pb.likelihood->slots) {
    if (!slot.provider || slot.provider->kind() != ProviderKind::predicted) continue;
    switch (slot.head_input) {
      case HeadInput::features: slot.provider->fit_standardizer(pb.train->features); break;
      case HeadInput::side:
        if (!pb.train_side) throw InvalidArgument("slot '" + slot.name + "' reads a side matrix but none was given");
        slot.provider->fit_standardizer(*pb.train_side);
        break;
      case HeadInput::representation:
        if (pb.model) {
          Model::Cache cache;
          pb.model->forward(pb.train->features, &cache);
          slot.provider->fit_standardizer(Model::representation(cache));
        } else {
          slot.provider->fit_standardizer(pb.train->features);
        }
        break;
    }
  }
}

double mse_of(const Matrix& pred, const Dataset& ds, Task task) {
  if (task == Task::regression) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < pred.rows(); ++i) {
      const double r = pred(i, 0) - ds.targets[static_cast<std::size_t>(i)];
      s += r * r;
    }
    return s / static_cast<double>(pred.rows());
  }
  return (pred - ds.features).squaredNorm() / static_cast<double>(pred.size());
}

double accuracy_of(const Matrix& logits, const Dataset& ds) {
  std::size_t hits = 0;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    Eigen::Index arg = 0;
    logits.row(i).maxCoeff(&arg);
    hits += arg == ds.labels[static_cast<std::size_t>(i)];
  }
  return static_cast<double>(hits) / static_cast<double>(logits.rows());
}

}  // namespace

FitReport fit(FitProblem& pb, const FitConfig& cfg) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const ObjectiveTerms terms = make_terms(pb, cfg);
  LikelihoodSpec& lik = *pb.likelihood;
  const Dataset& train = *pb.train;
  fit_head_standardizers(pb);

  auto blocks = parameter_blocks(terms);
  const std::size_t n_slots = lik.slots.size();
  std::vector<OptimizerState> states;
  states.emplace_back(cfg.optimizer, blocks[0].size());
  for (std::size_t s = 0; s < n_slots; ++s) {
    OptimizerSettings st = cfg.optimizer;
    st.lr = cfg.optimizer.lr * cfg.likelihood_lr_multiplier;
    const auto& p = lik.slots[s].provider;
    if (p && p->kind() == ProviderKind::data) {
      st.kind = cfg.data_optimizer;
      if (cfg.data_lr) st.lr = *cfg.data_lr;
    }
    states.emplace_back(st, blocks[1 + s].size());
  }
  {
    OptimizerSettings st = cfg.optimizer;
    st.lr = cfg.optimizer.lr * cfg.prior_lr_multiplier.value_or(cfg.likelihood_lr_multiplier);
    states.emplace_back(st, blocks.back().size());
  }

  const std::size_t n = train.rows();
  const std::size_t bs = cfg.batch_size == 0 || cfg.batch_size >= n ? n : cfg.batch_size;
  Rng batch_rng(cfg.seed, "fit/batches");
  Rng dropout_rng(cfg.seed, "fit/dropout");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::size_t cursor = n;  // forces a shuffle before the first minibatch
  std::vector<std::size_t> rows(bs);

  FitReport rep;
  rep.seed = cfg.seed;
  rep.steps = cfg.steps;
  rep.task = terms.task;
  rep.family = lik.family;
  rep.trajectory_stride = cfg.trajectory_stride;

  std::size_t last_step = 0;
  double last_loss = std::numeric_limits<double>::quiet_NaN();
  JointGradients g;
  for (std::size_t step = 0; step < cfg.steps; ++step) {
    if (bs == n) {
      std::iota(rows.begin(), rows.end(), std::size_t{0});
    } else {
      for (std::size_t k = 0; k < bs; ++k) {
        if (cursor == n) {
          for (std::size_t i = n; i-- > 1;) std::swap(order[i], order[batch_rng.below(i + 1)]);
          cursor = 0;
        }
        rows[k] = order[cursor++];
      }
    }
    const Batch batch{&train, rows, pb.train_side, true};
    const Evaluation ev = evaluate(terms, batch, &g, &dropout_rng);
    if (!std::isfinite(ev.loss)) throw Diverged("non-finite loss at step " + std::to_string(step), last_step, last_loss);
    if (!g.finite()) throw Diverged("non-finite gradient at step " + std::to_string(step), last_step, last_loss);
    if (step % cfg.trajectory_stride == 0) rep.trajectory.push_back(ev.loss);
    last_step = step;
    last_loss = ev.loss;

    if (!cfg.train_model) std::fill(g.model.begin(), g.model.end(), 0.0);
    if (pb.prior && pb.prior->frozen()) std::fill(g.prior.begin(), g.prior.end(), 0.0);
    const double norm = std::sqrt(g.squared_norm());
    if (norm > cfg.clip_norm) g.scale(cfg.clip_norm / norm);

    const auto gb = gradient_blocks(terms, g);
    if (cfg.train_model && !blocks[0].empty()) states[0].step(blocks[0], gb[0]);
    for (std::size_t s = 0; s < n_slots; ++s)
      if (!blocks[1 + s].empty()) states[1 + s].step(blocks[1 + s], gb[1 + s], g.touched[s]);
    if (pb.prior && !pb.prior->frozen()) states.back().step(blocks.back(), gb.back());
  }

  // Final evaluation without dropout.
  const Evaluation fin = evaluate(terms, Batch{&train, {}, pb.train_side, true});
  if (!std::isfinite(fin.loss)) throw Diverged("non-finite final loss", last_step, last_loss);
  rep.final_loss = fin.loss;
  rep.train_nll = fin.mean_nll;
  if (terms.task == Task::classification) {
    rep.train_accuracy = accuracy_of(fin.predictions, train);
  } else {
    rep.train_mse = mse_of(fin.predictions, train, terms.task);
  }
  if (pb.test) {
    if (!lik.has_data_provider()) {
      rep.test_nll = evaluate(terms, Batch{pb.test, {}, pb.test_side, false}).mean_nll;
    }
    const Matrix tp = predict(pb.model, pb.test->features);
    if (terms.task == Task::classification) {
      rep.test_accuracy = accuracy_of(tp, *pb.test);
    } else {
      rep.test_mse = mse_of(tp, *pb.test, terms.task);
    }
  }

  rep.model_parameters = pb.model ? pb.model->num_weights() : 0;
  rep.likelihood_parameters = lik.parameter_count();
  for (std::size_t s = 0; s < n_slots; ++s) {
    const auto& slot = lik.slots[s];
    SlotReport sr;
    sr.name = slot.name;
    const Matrix& v = fin.slot_values[s];
    sr.mean = v.mean();
    sr.min = v.minCoeff();
    sr.max = v.maxCoeff();
    if (slot.provider) {
      sr.conditioning = to_string(slot.provider->kind());
      sr.parameters = slot.provider->parameter_count();
      sr.space = slot.provider->space_class();
      sr.time = slot.provider->time_class();
    } else {
      sr.conditioning = "fixed";
      sr.space = "O(1)";
      sr.time = "O(1)";
    }
    rep.slots.push_back(std::move(sr));
  }
  if (pb.prior) {
    rep.prior_parameters = pb.prior->store().size();
    rep.effective_lambda = pb.prior->effective_lambda();
    rep.prior_nll = pb.prior->nll(pb.model->weights());
    rep.prior_raw_nll = pb.prior->raw_nll(pb.model->weights());
  }
  rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

FitReport fit(Model& model, LikelihoodSpec& likelihood, const Dataset& train, const FitConfig& cfg,
              const Dataset* test, PriorSpec* prior) {
  FitProblem pb;
  pb.model = &model;
  pb.likelihood = &likelihood;
  pb.prior = prior;
  pb.train = &train;
  pb.test = test;
  return fit(pb, cfg);
}

}  // namespace fulllik
