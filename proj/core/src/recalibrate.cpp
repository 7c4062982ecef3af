#include "fulllik/recalibrate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "fulllik/errors.hpp"
#include "fulllik/likelihood.hpp"
#include "fulllik/metrics.hpp"
#include "fulllik/optimizer.hpp"
#include "fulllik/rng.hpp"

namespace fulllik {

const char* to_string(RecalKind k) {
  switch (k) {
    case RecalKind::global_scaling: return "global_scaling";
    case RecalKind::vector_scaling: return "vector_scaling";
    case RecalKind::linear_scaling: return "linear_scaling";
    case RecalKind::linear_feature_scaling: return "linear_feature_scaling";
    case RecalKind::deep_scaling: return "deep_scaling";
    case RecalKind::platt: return "platt";
    case RecalKind::isotonic: return "isotonic";
  }
  return "?";
}

const char* short_name(RecalKind k) {
  switch (k) {
    case RecalKind::global_scaling: return "GS";
    case RecalKind::vector_scaling: return "VS";
    case RecalKind::linear_scaling: return "LS";
    case RecalKind::linear_feature_scaling: return "LFS";
    case RecalKind::deep_scaling: return "DS";
    case RecalKind::platt: return "platt";
    case RecalKind::isotonic: return "isotonic";
  }
  return "?";
}

RecalKind parse_recal_kind(const std::string& s) {
  for (auto k : {RecalKind::global_scaling, RecalKind::vector_scaling, RecalKind::linear_scaling,
                 RecalKind::linear_feature_scaling, RecalKind::deep_scaling, RecalKind::platt, RecalKind::isotonic})
    if (s == to_string(k) || s == short_name(k)) return k;
  throw InvalidArgument("unknown recalibration method '" + s + "'");
}

void CalibrationInput::validate() const {
  const auto n = rows();
  if (n == 0) throw InvalidArgument("calibration input is empty");
  if (features.size() > 0 && static_cast<std::size_t>(features.rows()) != n)
    throw InvalidArgument("feature rows must match output rows");
  if (classification()) {
    if (labels.size() != n) throw InvalidArgument("label count must match output rows");
    for (int l : labels)
      if (l < 0 || l >= outputs.cols()) throw InvalidArgument("label outside the logit width");
  } else {
    if (outputs.cols() != 1) throw InvalidArgument("regression calibration expects one mean column");
    if (targets.size() != n) throw InvalidArgument("target count must match output rows");
    if (base_sigma.size() != n) throw InvalidArgument("regression calibration needs the base model's sigma");
  }
}

RecalConfig RecalConfig::defaults() {
  RecalConfig c;
  c.fit.steps = 2000;
  c.fit.optimizer.lr = 0.01;
  c.fit.likelihood_lr_multiplier = 1.0;
  return c;
}

namespace {

bool is_scaling(RecalKind k) {
  return k == RecalKind::global_scaling || k == RecalKind::linear_scaling ||
         k == RecalKind::linear_feature_scaling || k == RecalKind::deep_scaling;
}

Matrix softmax_rows(const Matrix& logits, std::span<const double> tau = {}) {
  Matrix p(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double t = tau.empty() ? 1.0 : tau[static_cast<std::size_t>(i)];
    const auto row = softmax_probs({logits.data() + i * logits.cols(), static_cast<std::size_t>(logits.cols())}, t);
    for (Eigen::Index j = 0; j < logits.cols(); ++j) p(i, j) = row[static_cast<std::size_t>(j)];
  }
  return p;
}

// One-vs-rest score for class j: z_j - logsumexp of the other logits, the
// log-odds of the softmax probability.
Matrix class_log_odds(const Matrix& logits) {
  Matrix s(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i)
    for (Eigen::Index j = 0; j < logits.cols(); ++j) {
      double m = -std::numeric_limits<double>::infinity();
      for (Eigen::Index k = 0; k < logits.cols(); ++k)
        if (k != j) m = std::max(m, logits(i, k));
      double acc = 0.0;
      for (Eigen::Index k = 0; k < logits.cols(); ++k)
        if (k != j) acc += std::exp(logits(i, k) - m);
      s(i, j) = logits(i, j) - (m + std::log(acc));
    }
  return s;
}

void normalize_rows(Matrix& p) {
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    const double s = p.row(i).sum();
    if (s > 0.0) {
      p.row(i) /= s;
    } else {
      p.row(i).setConstant(1.0 / static_cast<double>(p.cols()));
    }
  }
}

double sigmoid(double x) { return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); }

// Platt's fit for one binary problem, with smoothed targets.
std::pair<double, double> platt_fit(std::span<const double> score, std::span<const int> positive) {
  double n_pos = 0.0;
  for (int v : positive) n_pos += v;
  const double n_neg = static_cast<double>(positive.size()) - n_pos;
  const double hi = (n_pos + 1.0) / (n_pos + 2.0);
  const double lo = 1.0 / (n_neg + 2.0);
  auto loss = [&](double a, double b) {
    double l = 0.0;
    for (std::size_t i = 0; i < score.size(); ++i) {
      const double t = positive[i] ? hi : lo;
      const double z = a * score[i] + b;
      // t * log(1 + e^-z) + (1 - t) * log(1 + e^z)
      const double sp_neg = z > 0 ? std::log1p(std::exp(-z)) : -z + std::log1p(std::exp(z));
      l += t * sp_neg + (1.0 - t) * (sp_neg + z);
    }
    return l;
  };
  double a = 1.0, b = 0.0;
  double f = loss(a, b);
  for (int it = 0; it < 100; ++it) {
    double ga = 0, gb = 0, haa = 1e-12, hab = 0, hbb = 1e-12;
    for (std::size_t i = 0; i < score.size(); ++i) {
      const double t = positive[i] ? hi : lo;
      const double p = sigmoid(a * score[i] + b);
      const double d = p - t;
      const double w = p * (1.0 - p);
      ga += d * score[i];
      gb += d;
      haa += w * score[i] * score[i];
      hab += w * score[i];
      hbb += w;
    }
    const double det = haa * hbb - hab * hab;
    if (!(std::abs(det) > 0.0)) break;
    const double da = -(hbb * ga - hab * gb) / det;
    const double db = -(-hab * ga + haa * gb) / det;
    double step = 1.0;
    bool improved = false;
    while (step > 1e-10) {
      const double fa = loss(a + step * da, b + step * db);
      if (fa < f + 1e-4 * step * (ga * da + gb * db)) {
        a += step * da;
        b += step * db;
        improved = std::abs(f - fa) > 1e-14 * (1.0 + std::abs(f));
        f = fa;
        break;
      }
      step *= 0.5;
    }
    if (!improved) break;
  }
  return {a, b};
}

}  // namespace

Matrix uncalibrated_probabilities(const CalibrationInput& in) {
  in.validate();
  if (!in.classification()) throw InvalidArgument("probabilities need a classification input");
  return softmax_rows(in.outputs);
}

std::vector<double> uncalibrated_pit(const CalibrationInput& in) {
  in.validate();
  if (in.classification()) throw InvalidArgument("PIT values need a regression input");
  std::vector<double> u(in.rows());
  for (std::size_t i = 0; i < u.size(); ++i)
    u[i] = normal_cdf((in.targets[i] - in.outputs(static_cast<Eigen::Index>(i), 0)) / in.base_sigma[i]);
  return u;
}

Recalibrator Recalibrator::fit(RecalKind kind, const CalibrationInput& val, const RecalConfig& cfg) {
  val.validate();
  Recalibrator r;
  r.kind_ = kind;
  r.classification_ = val.classification();
  r.width_ = static_cast<std::size_t>(val.outputs.cols());
  r.feature_width_ = static_cast<std::size_t>(val.features.cols());
  const std::size_t n = val.rows();

  if (r.classification_) {
    std::vector<int> seen(r.width_, 0);
    for (int l : val.labels) seen[static_cast<std::size_t>(l)] = 1;
    if (std::accumulate(seen.begin(), seen.end(), 0) < 2) throw InvalidArgument("validation labels hold a single class");
  }
  if (!r.classification_ && (kind == RecalKind::vector_scaling || kind == RecalKind::platt))
    throw InvalidArgument(std::string(short_name(kind)) + " applies to classifiers only");
  if ((kind == RecalKind::linear_feature_scaling || kind == RecalKind::deep_scaling) && val.features.size() == 0)
    throw InvalidArgument(std::string(short_name(kind)) + " needs penultimate features");

  if (is_scaling(kind)) {
    Dataset ds;
    ds.features = val.outputs;
    if (r.classification_) {
      ds.target_kind = TargetKind::classes;
      ds.labels = val.labels;
    } else {
      ds.target_kind = TargetKind::real;
      ds.targets = val.targets;
      r.relative_ = kind == RecalKind::global_scaling && cfg.relative_regression_scale;
      if (r.relative_) {
        // sigma_i = k * base_i: fit k on residuals measured in base units.
        for (std::size_t i = 0; i < n; ++i) {
          ds.features(static_cast<Eigen::Index>(i), 0) /= val.base_sigma[i];
          ds.targets[i] /= val.base_sigma[i];
        }
      }
    }
    LikelihoodSpec lik = LikelihoodSpec::make(r.classification_ ? Family::softmax : Family::normal);
    auto& slot = lik.slots[0];
    const auto seed = Rng::derive(cfg.fit.seed, "recalibrate/head");
    switch (kind) {
      case RecalKind::global_scaling: slot.make_global(1.0); break;
      case RecalKind::linear_scaling:
        slot.make_predicted(Architecture::linear(r.width_, 1), false, 1.0, seed, HeadInput::features);
        break;
      case RecalKind::linear_feature_scaling:
        slot.make_predicted(Architecture::linear(r.feature_width_, 1), false, 1.0, seed, HeadInput::side);
        break;
      case RecalKind::deep_scaling:
        slot.make_predicted(Architecture::mlp(r.feature_width_, cfg.deep_hidden, 1), false, 1.0, seed, HeadInput::side);
        break;
      default: break;
    }
    FitProblem pb;
    pb.likelihood = &lik;
    pb.train = &ds;
    pb.train_side = val.features.size() > 0 ? &val.features : nullptr;
    pb.task = r.classification_ ? Task::classification : Task::regression;
    r.initial_nll_ = evaluate(make_terms(pb, cfg.fit), Batch{&ds, {}, pb.train_side, true}).mean_nll;
    const auto rep = fulllik::fit(pb, cfg.fit);
    r.fitted_nll_ = rep.train_nll;
    r.likelihood_ = std::move(lik);
    return r;
  }

  switch (kind) {
    case RecalKind::vector_scaling: {
      const std::size_t c = r.width_;
      std::vector<double> params(2 * c, 0.0);
      for (std::size_t j = 0; j < c; ++j) params[j] = 1.0;
      OptimizerState opt(cfg.fit.optimizer, params.size());
      std::vector<double> grad(params.size());
      std::vector<double> z(c);
      auto nll_and_grad = [&](bool want_grad) {
        double total = 0.0;
        std::fill(grad.begin(), grad.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
          for (std::size_t j = 0; j < c; ++j)
            z[j] = params[j] * val.outputs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) + params[c + j];
          const auto y = static_cast<std::size_t>(val.labels[i]);
          total += softmax_nll(z, {1.0}, y);
          if (!want_grad) continue;
          const auto g = softmax_nll_grads(z, {1.0}, y);
          for (std::size_t j = 0; j < c; ++j) {
            grad[j] += g.d_logits[j] * val.outputs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
            grad[c + j] += g.d_logits[j];
          }
        }
        for (double& v : grad) v /= static_cast<double>(n);
        return total / static_cast<double>(n);
      };
      r.initial_nll_ = nll_and_grad(false);
      for (std::size_t step = 0; step < cfg.fit.steps; ++step) {
        const double loss = nll_and_grad(true);
        if (!std::isfinite(loss)) throw Diverged("vector scaling diverged", step, loss);
        double norm = 0.0;
        for (double v : grad) norm += v * v;
        norm = std::sqrt(norm);
        if (norm > cfg.fit.clip_norm)
          for (double& v : grad) v *= cfg.fit.clip_norm / norm;
        opt.step(params, grad);
      }
      r.fitted_nll_ = nll_and_grad(false);
      r.vs_weight_.assign(params.begin(), params.begin() + static_cast<std::ptrdiff_t>(c));
      r.vs_bias_.assign(params.begin() + static_cast<std::ptrdiff_t>(c), params.end());
      break;
    }
    case RecalKind::platt: {
      const Matrix score = class_log_odds(val.outputs);
      std::vector<double> s(n);
      std::vector<int> pos(n);
      for (std::size_t j = 0; j < r.width_; ++j) {
        for (std::size_t i = 0; i < n; ++i) {
          s[i] = score(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
          pos[i] = val.labels[i] == static_cast<int>(j);
        }
        const auto [a, b] = platt_fit(s, pos);
        r.platt_a_.push_back(a);
        r.platt_b_.push_back(b);
      }
      break;
    }
    case RecalKind::isotonic: {
      if (r.classification_) {
        const Matrix p = softmax_rows(val.outputs);
        std::vector<double> x(n), y(n);
        for (std::size_t j = 0; j < r.width_; ++j) {
          for (std::size_t i = 0; i < n; ++i) {
            x[i] = p(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
            y[i] = val.labels[i] == static_cast<int>(j) ? 1.0 : 0.0;
          }
          r.iso_.emplace_back(x, y);
        }
      } else {
        // Map base PIT values to their empirical CDF on the validation split.
        const auto u = uncalibrated_pit(val);
        std::vector<double> sorted = u;
        std::sort(sorted.begin(), sorted.end());
        std::vector<double> freq(n);
        for (std::size_t i = 0; i < n; ++i)
          freq[i] = static_cast<double>(std::upper_bound(sorted.begin(), sorted.end(), u[i]) - sorted.begin()) /
                    static_cast<double>(n);
        r.iso_.emplace_back(u, freq);
      }
      break;
    }
    default: break;
  }
  return r;
}

void Recalibrator::check_shape(const CalibrationInput& in) const {
  in.validate();
  if (in.classification() != classification_) throw InvalidArgument("input task differs from the fitted task");
  if (static_cast<std::size_t>(in.outputs.cols()) != width_) throw InvalidArgument("output width differs from fit time");
  if ((kind_ == RecalKind::linear_feature_scaling || kind_ == RecalKind::deep_scaling) &&
      static_cast<std::size_t>(in.features.cols()) != feature_width_)
    throw InvalidArgument("feature width differs from fit time");
}

Matrix Recalibrator::head_params(const CalibrationInput& in) const {
  const auto& provider = *likelihood_->slots[0].provider;
  ParamRequest req;
  req.batch = in.rows();
  req.inference = true;
  if (kind_ == RecalKind::linear_scaling) {
    req.features = &in.outputs;
  } else if (kind_ != RecalKind::global_scaling) {
    req.features = &in.features;
  }
  return provider.get_params(req);
}

std::vector<double> Recalibrator::parameter(const CalibrationInput& in) const {
  check_shape(in);
  if (!is_scaling(kind_)) throw InvalidState(std::string(short_name(kind_)) + " has no temperature or scale head");
  const Matrix p = head_params(in);
  std::vector<double> out(in.rows());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = p(static_cast<Eigen::Index>(i), 0);
    if (relative_) out[i] *= in.base_sigma[i];
  }
  return out;
}

Matrix Recalibrator::probabilities(const CalibrationInput& in) const {
  check_shape(in);
  if (!classification_) throw InvalidState("regression recalibrators produce PIT values, not probabilities");
  const std::size_t n = in.rows();
  if (is_scaling(kind_)) return softmax_rows(in.outputs, parameter(in));
  Matrix p(in.outputs.rows(), in.outputs.cols());
  switch (kind_) {
    case RecalKind::vector_scaling: {
      Matrix z = in.outputs;
      for (Eigen::Index j = 0; j < z.cols(); ++j)
        z.col(j) = z.col(j).array() * vs_weight_[static_cast<std::size_t>(j)] + vs_bias_[static_cast<std::size_t>(j)];
      return softmax_rows(z);
    }
    case RecalKind::platt: {
      const Matrix score = class_log_odds(in.outputs);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < width_; ++j)
          p(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
              sigmoid(platt_a_[j] * score(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) + platt_b_[j]);
      break;
    }
    case RecalKind::isotonic: {
      const Matrix base = softmax_rows(in.outputs);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < width_; ++j)
          p(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
              iso_[j](base(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
      break;
    }
    default: break;
  }
  normalize_rows(p);
  return p;
}

std::vector<double> Recalibrator::pit(const CalibrationInput& in) const {
  check_shape(in);
  if (classification_) throw InvalidState("classification recalibrators produce probabilities, not PIT values");
  if (kind_ == RecalKind::isotonic) {
    auto u = uncalibrated_pit(in);
    for (double& v : u) v = iso_[0](v);
    return u;
  }
  const auto sigma = parameter(in);
  std::vector<double> u(in.rows());
  for (std::size_t i = 0; i < u.size(); ++i)
    u[i] = normal_cdf((in.targets[i] - in.outputs(static_cast<Eigen::Index>(i), 0)) / sigma[i]);
  return u;
}

CalibrationTable compare_methods(const CalibrationInput& val, const CalibrationInput& test, const RecalConfig& cfg) {
  val.validate();
  test.validate();
  CalibrationTable table;
  const bool cls = val.classification();
  table.metric = cls ? "ECE" : "CAL";
  auto score_probs = [&](const Matrix& p) { return ece(p, test.labels, cfg.ece_bins); };
  auto score_pit = [&](const std::vector<double>& u) { return cal_from_pit(u, cfg.cal_levels); };

  {
    CalibrationRow row{"uncalibrated", {}, {}, {}};
    row.value = cls ? score_probs(uncalibrated_probabilities(test)) : score_pit(uncalibrated_pit(test));
    table.rows.push_back(row);
  }
  const std::vector<RecalKind> kinds =
      cls ? std::vector<RecalKind>{RecalKind::platt, RecalKind::isotonic, RecalKind::global_scaling,
                                   RecalKind::vector_scaling, RecalKind::linear_scaling,
                                   RecalKind::linear_feature_scaling}
          : std::vector<RecalKind>{RecalKind::isotonic, RecalKind::global_scaling, RecalKind::linear_scaling,
                                   RecalKind::deep_scaling};
  for (auto k : kinds) {
    CalibrationRow row{short_name(k), {}, {}, {}};
    try {
      const auto r = Recalibrator::fit(k, val, cfg);
      row.value = cls ? score_probs(r.probabilities(test)) : score_pit(r.pit(test));
      if (is_scaling(k)) {
        const auto p = r.parameter(test);
        row.mean_parameter = std::accumulate(p.begin(), p.end(), 0.0) / static_cast<double>(p.size());
      }
    } catch (const Error& e) {
      row.error = e.what();
    }
    table.rows.push_back(row);
  }
  return table;
}

}  // namespace fulllik
