#include <doctest.h>

#include <cmath>

#include "../support/oracles.hpp"
#include "fulllik/errors.hpp"
#include "fulllik/fit.hpp"
#include "fulllik/isotonic.hpp"
#include "fulllik/likelihood.hpp"
#include "fulllik/metrics.hpp"
#include "fulllik/recalibrate.hpp"
#include "fulllik/rng.hpp"

using namespace fulllik;
using doctest::Approx;

namespace {

// Logits z ~ N(0, 1.5^2) with labels drawn from softmax(z); the returned
// outputs are `sharpen` * z.
CalibrationInput drawn_from_own_softmax(std::size_t n, double sharpen, std::uint64_t seed, const char* split) {
  Rng rng(seed, split);
  CalibrationInput in;
  in.outputs.resize(static_cast<Eigen::Index>(n), 4);
  in.split = split;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> z(4);
    for (auto& v : z) v = rng.normal(0.0, 1.5);
    const auto p = softmax_probs(z);
    double u = rng.uniform(), acc = 0.0;
    int label = 3;
    for (int c = 0; c < 4; ++c) {
      acc += p[static_cast<std::size_t>(c)];
      if (u < acc) {
        label = c;
        break;
      }
    }
    in.labels.push_back(label);
    for (int c = 0; c < 4; ++c) in.outputs(static_cast<Eigen::Index>(i), c) = sharpen * z[static_cast<std::size_t>(c)];
  }
  in.features = in.outputs;
  return in;
}

int argmax_row(const Matrix& m, Eigen::Index i) {
  Eigen::Index best = 0;
  m.row(i).maxCoeff(&best);
  return static_cast<int>(best);
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace

TEST_SUITE("recalibrate") {

TEST_CASE("global temperature on calibrated and overconfident logits") {
  auto cfg = RecalConfig::defaults();
  const auto calibrated = drawn_from_own_softmax(5000, 1.0, 1, "validation");
  const double t1 = mean(Recalibrator::fit(RecalKind::global_scaling, calibrated, cfg).parameter(calibrated));
  CHECK(t1 >= 0.95);
  CHECK(t1 <= 1.05);

  const auto sharp = drawn_from_own_softmax(5000, 2.0, 2, "validation");
  const double t2 = mean(Recalibrator::fit(RecalKind::global_scaling, sharp, cfg).parameter(sharp));
  CHECK(t2 == Approx(0.5).epsilon(0.1));
}

TEST_CASE("temperature limits") {
  const std::vector<double> z{2.0, 1.0};
  const auto hot = softmax_probs(z, 200.0);
  CHECK(hot[0] == Approx(1.0));
  CHECK(hot[1] == Approx(0.0));
  const auto cold = softmax_probs(z, 1e-9);
  CHECK(cold[0] == Approx(0.5));
  CalibrationInput in = drawn_from_own_softmax(10, 1.0, 3, "test");
  const Matrix p = uncalibrated_probabilities(in);
  for (Eigen::Index i = 0; i < 10; ++i) {
    const std::vector<double> row(in.outputs.row(i).begin(), in.outputs.row(i).end());
    const auto q = softmax_probs(row, 1.0);
    for (int c = 0; c < 4; ++c) CHECK(p(i, c) == Approx(q[static_cast<std::size_t>(c)]).epsilon(1e-15));
  }
}

TEST_CASE("temperature kinds keep the argmax and emit valid probabilities") {
  auto cfg = RecalConfig::defaults();
  cfg.fit.steps = 500;
  const auto val = drawn_from_own_softmax(800, 2.5, 4, "validation");
  const auto test = drawn_from_own_softmax(800, 2.5, 5, "test");
  for (auto kind : {RecalKind::global_scaling, RecalKind::linear_scaling, RecalKind::linear_feature_scaling,
                    RecalKind::deep_scaling}) {
    const auto r = Recalibrator::fit(kind, val, cfg);
    CHECK(r.fitted_nll() <= r.initial_nll() + 1e-6);
    for (double t : r.parameter(test)) CHECK(t >= 0.2 / (std::log(2.0) + 0.2) - 1e-12);
    const Matrix p = r.probabilities(test);
    for (Eigen::Index i = 0; i < p.rows(); ++i) {
      CHECK(p.row(i).sum() == Approx(1.0).epsilon(1e-12));
      CHECK(p.row(i).minCoeff() >= 0.0);
      CHECK(p.row(i).maxCoeff() <= 1.0);
      if (kind != RecalKind::deep_scaling) CHECK(argmax_row(p, i) == argmax_row(test.outputs, i));
    }
  }
}

TEST_CASE("vector scaling can change the argmax") {
  // Class 1 is right whenever the class-0 logit is below 0.8, though raw
  // logits always favour class 0.
  CalibrationInput val;
  Rng rng(6, "t/vs");
  val.outputs.resize(400, 2);
  for (int i = 0; i < 400; ++i) {
    const double a = rng.uniform(0.0, 2.0);
    val.outputs(i, 0) = a;
    val.outputs(i, 1) = 0.0;
    val.labels.push_back(a < 0.8 ? 1 : 0);
  }
  auto cfg = RecalConfig::defaults();
  const auto r = Recalibrator::fit(RecalKind::vector_scaling, val, cfg);
  const Matrix p = r.probabilities(val);
  int changed = 0;
  for (Eigen::Index i = 0; i < p.rows(); ++i) changed += argmax_row(p, i) != argmax_row(val.outputs, i);
  CHECK(changed > 0);
}

TEST_CASE("fit errors") {
  CalibrationInput one_class = drawn_from_own_softmax(50, 1.0, 7, "validation");
  std::fill(one_class.labels.begin(), one_class.labels.end(), 2);
  CHECK_THROWS_AS(Recalibrator::fit(RecalKind::global_scaling, one_class, RecalConfig::defaults()), InvalidArgument);

  auto cfg = RecalConfig::defaults();
  cfg.fit.steps = 50;
  const auto val = drawn_from_own_softmax(100, 1.0, 8, "validation");
  const auto r = Recalibrator::fit(RecalKind::linear_scaling, val, cfg);
  CalibrationInput wrong = val;
  wrong.outputs = Matrix::Zero(100, 3);
  wrong.labels.assign(100, 0);
  CHECK_THROWS_AS(r.probabilities(wrong), InvalidArgument);
}

TEST_CASE("isotonic fits") {
  const std::vector<double> mono{0.1, 0.2, 0.2, 0.5, 0.9};
  const auto fitted = pav(mono);
  for (std::size_t i = 0; i < mono.size(); ++i) CHECK(fitted[i] == Approx(mono[i]));

  Rng rng(9, "t/pav");
  for (std::size_t n = 1; n <= 8; ++n)
    for (int trial = 0; trial < 50; ++trial) {
      std::vector<double> y(n);
      for (auto& v : y) v = std::round(rng.normal() * 4.0) / 4.0;
      const auto a = pav(y);
      const auto b = oracle::isotonic_brute_force(y);
      for (std::size_t i = 0; i < n; ++i) CHECK(a[i] == Approx(b[i]).epsilon(1e-12));
      for (std::size_t i = 1; i < n; ++i) CHECK(a[i] >= a[i - 1]);
    }

  std::vector<double> x(100), y(100);
  for (int i = 0; i < 100; ++i) {
    x[static_cast<std::size_t>(i)] = rng.uniform();
    y[static_cast<std::size_t>(i)] = rng.uniform() < x[static_cast<std::size_t>(i)] ? 1.0 : 0.0;
  }
  const IsotonicFit iso(x, y);
  double prev = iso(-1.0);
  for (double q = -1.0; q <= 2.0; q += 0.01) {
    CHECK(iso(q) >= prev);
    prev = iso(q);
  }
}

TEST_CASE("comparison on calibrated data stays near the uncalibrated error") {
  auto cfg = RecalConfig::defaults();
  cfg.fit.steps = 500;
  const auto val = drawn_from_own_softmax(3000, 1.0, 10, "validation");
  const auto test = drawn_from_own_softmax(3000, 1.0, 11, "test");
  const auto table = compare_methods(val, test, cfg);
  CHECK(table.metric == "ECE");
  REQUIRE(table.rows.front().method == "uncalibrated");
  const double base = *table.rows.front().value;
  for (const auto& row : table.rows) {
    CHECK(row.error.empty());
    REQUIRE(row.value);
    INFO(row.method << " ECE " << *row.value << " vs " << base << " mean parameter " << row.mean_parameter.value_or(-1.0));
    CHECK(*row.value <= base + 0.02);
  }
}

TEST_CASE("every scaling method improves an overfit classifier") {
  const std::uint64_t seed = 2;
  const Dataset train = gen_blobs(300, 10, 4, 0.7, seed, 0);
  const Dataset val = gen_blobs(1000, 10, 4, 0.7, seed, 1);
  const Dataset test = gen_blobs(1000, 10, 4, 0.7, seed, 2);
  Model model(Architecture::mlp(10, {100}, 4), InitScheme::he, seed);
  auto lik = LikelihoodSpec::make(Family::softmax);
  FitConfig base;
  base.optimizer.lr = 0.01;
  base.steps = 200;
  base.seed = seed;
  const auto rep = fit(model, lik, train, base);
  CHECK(*rep.train_accuracy > 0.95);
  auto inputs = [&](const Dataset& d, const char* split) {
    CalibrationInput in;
    Model::Cache cache;
    in.outputs = model.forward(d.features, &cache);
    in.features = Model::representation(cache);
    in.labels = d.labels;
    in.split = split;
    return in;
  };
  auto cfg = RecalConfig::defaults();
  cfg.fit.seed = seed;
  const auto table = compare_methods(inputs(val, "validation"), inputs(test, "test"), cfg);
  const double uncal = *table.rows.front().value;
  for (const auto& row : table.rows)
    if (row.method == "GS" || row.method == "VS" || row.method == "LS" || row.method == "LFS") {
      CHECK_MESSAGE(*row.value < uncal, row.method);
    }
}

TEST_CASE("global scale fixes a misscaled homoskedastic regressor") {
  auto make = [](std::uint64_t seed, const char* split) {
    Rng rng(seed, split);
    CalibrationInput in;
    in.outputs.resize(2000, 1);
    in.split = split;
    for (int i = 0; i < 2000; ++i) {
      const double mu = rng.normal(0.0, 3.0);
      in.outputs(i, 0) = mu;
      in.targets.push_back(mu + rng.normal());
      in.base_sigma.push_back(3.0);
    }
    return in;
  };
  auto cfg = RecalConfig::defaults();
  const auto table = compare_methods(make(12, "validation"), make(13, "test"), cfg);
  CHECK(table.metric == "CAL");
  double uncal = 0.0, gs = 0.0, iso = 0.0;
  for (const auto& row : table.rows) {
    if (row.method == "uncalibrated") uncal = *row.value;
    if (row.method == "GS") gs = *row.value;
    if (row.method == "isotonic") iso = *row.value;
  }
  CHECK(gs < 0.1 * uncal);
  CHECK(gs <= iso + 0.01);
}

}  // TEST_SUITE
