#include <doctest.h>

#include <cmath>
#include <limits>

#include "../support/oracles.hpp"
#include "fulllik/errors.hpp"
#include "fulllik/fit.hpp"
#include "fulllik/likelihood.hpp"
#include "fulllik/optimizer.hpp"
#include "fulllik/rng.hpp"

using namespace fulllik;
using doctest::Approx;

namespace {

Dataset linear_data(std::size_t n, std::size_t d, double noise, std::uint64_t seed) {
  Rng rng(seed, "t/linear-data");
  Dataset ds;
  ds.features.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  ds.target_kind = TargetKind::real;
  for (std::size_t i = 0; i < n; ++i) {
    double y = 0.5;
    for (std::size_t j = 0; j < d; ++j) {
      const double v = rng.normal();
      ds.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
      y += v * (1.0 + static_cast<double>(j) * 0.5);
    }
    ds.targets.push_back(y + rng.normal(0.0, noise));
  }
  return ds;
}

}  // namespace

TEST_SUITE("fitting") {

TEST_CASE("forward pass") {
  Model zero(Architecture::linear(3, 2), std::vector<double>(8, 0.0));
  CHECK(zero.forward(Matrix::Ones(4, 3)).cwiseAbs().maxCoeff() == 0.0);

  // 2 -> 2 (relu) -> 1 with W1 = [[1, -1], [2, 1]], b1 = [0, -1], W2 = [3, -2], b2 = 0.5
  Model mlp(Architecture::mlp(2, {2}, 1), std::vector<double>{1, -1, 2, 1, 0, -1, 3, -2, 0.5});
  Matrix x(1, 2);
  x << 1.0, 0.5;
  // hidden pre: [1 + 1, -1 + 0.5 - 1] = [2, -1.5] -> relu [2, 0]; out 3*2 + 0.5
  CHECK(mlp.forward(x)(0, 0) == Approx(6.5));
  CHECK_THROWS_AS(mlp.forward(Matrix::Ones(1, 3)), InvalidArgument);

  Model ae(Architecture::autoencoder(6, 2, {4}, 0.0), InitScheme::glorot_uniform, 3);
  Rng rng(1, "t/dropout");
  const Matrix in = Matrix::Random(5, 6);
  const Matrix a = ae.forward(in);
  const Matrix b = ae.forward(in, nullptr, &rng);
  CHECK(a == b);
}

TEST_CASE("backward pass") {
  Rng rng(2, "t/backward");
  Model lin(Architecture::linear(3, 1), InitScheme::glorot_uniform, 2);
  Matrix x(10, 3);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
  std::vector<double> y(10);
  for (auto& v : y) v = rng.normal();
  Model::Cache cache;
  const Matrix pred = lin.forward(x, &cache);
  CHECK(Eigen::Map<const Eigen::VectorXd>(lin.backward(cache, Matrix::Zero(10, 1)).weights.data(), 4).norm() == 0.0);

  Matrix up(10, 1);
  for (int i = 0; i < 10; ++i) up(i, 0) = 2.0 * (pred(i, 0) - y[static_cast<std::size_t>(i)]) / 10.0;
  const auto g = lin.backward(cache, up);
  for (int j = 0; j < 3; ++j) {
    double expect = 0.0;
    for (int i = 0; i < 10; ++i) {
      double r = lin.weights()[3];
      for (int k = 0; k < 3; ++k) r += x(i, k) * lin.weights()[static_cast<std::size_t>(k)];
      expect += 2.0 * x(i, j) * (r - y[static_cast<std::size_t>(i)]) / 10.0;
    }
    CHECK(g.weights[static_cast<std::size_t>(j)] == Approx(expect).epsilon(1e-12));
  }

  Model mlp(Architecture::mlp(3, {2}, 1), InitScheme::he, 5);
  Matrix up2(10, 1);
  for (int i = 0; i < 10; ++i) up2(i, 0) = rng.normal();
  Model::Cache c2;
  mlp.forward(x, &c2);
  const auto gm = mlp.backward(c2, up2);
  auto loss = [&](const Model& m) { return m.forward(x).cwiseProduct(up2).sum(); };
  for (std::size_t k = 0; k < mlp.num_weights(); ++k) {
    const double w0 = mlp.weights()[k];
    const double fd = oracle::central_diff(
        [&](double v) {
          mlp.mutable_weights()[k] = v;
          const double l = loss(mlp);
          mlp.mutable_weights()[k] = w0;
          return l;
        },
        w0);
    CHECK(oracle::rel_err(gm.weights[k], fd, 1e-6) < 1e-5);
  }
  // The weights were touched above, so the cache is stale.
  CHECK_THROWS_AS(mlp.backward(c2, up2), InvalidState);
}

TEST_CASE("optimizer steps") {
  OptimizerSettings sgd;
  sgd.kind = OptimizerKind::sgd;
  sgd.lr = 0.1;
  std::vector<double> p{0.0};
  OptimizerState s(sgd, 1);
  s.step(p, std::vector<double>{1.0});
  CHECK(p[0] == Approx(-0.1));

  for (double scale : {1e-2, 1.0, 1e6}) {
    OptimizerSettings adam;
    adam.lr = 0.01;
    std::vector<double> q{1.0, -2.0};
    OptimizerState a(adam, 2);
    a.step(q, std::vector<double>{scale, -3.0 * scale});
    CHECK(q[0] == Approx(1.0 - 0.01).epsilon(1e-6));
    CHECK(q[1] == Approx(-2.0 + 0.01).epsilon(1e-6));
  }

  OptimizerSettings rms;
  rms.kind = OptimizerKind::rmsprop_sparse;
  rms.lr = 0.05;
  std::vector<double> r{0.3, 0.4, 0.5};
  OptimizerState st(rms, 3);
  const std::vector<std::uint8_t> touched{0, 1, 0};
  st.step(r, std::vector<double>{9.0, 1.0, 9.0}, touched);
  CHECK(r[0] == 0.3);
  CHECK(r[1] != 0.4);
  CHECK(r[2] == 0.5);

  std::vector<double> bad{0.0};
  OptimizerState d(sgd, 1);
  CHECK_THROWS_AS(d.step(bad, std::vector<double>{NAN}), Diverged);
}

TEST_CASE("config validation") {
  Dataset ds = linear_data(10, 2, 0.1, 1);
  Model m(Architecture::linear(2, 1), InitScheme::glorot_uniform, 1);
  auto lik = LikelihoodSpec::make(Family::normal);
  FitConfig cfg;
  cfg.optimizer.lr = 0.0;
  CHECK_THROWS_AS(fit(m, lik, ds, cfg), InvalidArgument);
  cfg = {};
  cfg.steps = 0;
  CHECK_THROWS_AS(fit(m, lik, ds, cfg), InvalidArgument);
  cfg = {};
  cfg.clip_norm = 0.0;
  CHECK_THROWS_AS(fit(m, lik, ds, cfg), InvalidArgument);
}

TEST_CASE("global scale converges to the residual RMS on fixed predictions") {
  Rng rng(3, "t/rms-fit");
  Dataset ds;
  ds.features.resize(200, 1);
  ds.target_kind = TargetKind::real;
  double ss = 0.0;
  for (int i = 0; i < 200; ++i) {
    const double r = rng.normal(0.0, 0.8);
    ds.features(i, 0) = rng.normal();
    ds.targets.push_back(ds.features(i, 0) - r);
    ss += r * r;
  }
  auto lik = LikelihoodSpec::make(Family::normal);
  lik.slot("sigma").make_global(1.0);
  FitProblem pb;
  pb.likelihood = &lik;
  pb.train = &ds;
  FitConfig cfg;
  cfg.steps = 4000;
  cfg.optimizer.lr = 0.01;
  cfg.likelihood_lr_multiplier = 1.0;
  const auto rep = fit(pb, cfg);
  CHECK(std::abs(rep.slots[0].mean - std::sqrt(ss / 200.0)) < 1e-3);
}

TEST_CASE("unit scale reduces the loss to half the MSE plus a constant") {
  Dataset ds = linear_data(40, 3, 0.5, 4);
  Model m(Architecture::linear(3, 1), InitScheme::glorot_uniform, 4);
  auto lik = LikelihoodSpec::make(Family::normal);
  FitConfig cfg;
  cfg.steps = 50;
  const auto rep = fit(m, lik, ds, cfg);
  const Matrix pred = m.forward(ds.features);
  double mse = 0.0;
  for (int i = 0; i < 40; ++i) mse += std::pow(pred(i, 0) - ds.targets[static_cast<std::size_t>(i)], 2);
  mse /= 40.0;
  CHECK(rep.train_nll == Approx(0.5 * mse + kHalfLogTwoPi).epsilon(1e-12));
}

TEST_CASE("fits are reproducible from the seed") {
  Dataset ds = linear_data(50, 3, 1.0, 5);
  auto run = [&](std::vector<double>& weights) {
    Model m(Architecture::mlp(3, {6}, 1), InitScheme::he, 5);
    auto lik = LikelihoodSpec::make(Family::normal);
    lik.slot("sigma").make_predicted(Architecture::linear(3, 1), false, 1.0, 9);
    FitConfig cfg;
    cfg.steps = 200;
    cfg.batch_size = 16;
    cfg.seed = 77;
    const auto rep = fit(m, lik, ds, cfg);
    weights.assign(m.weights().begin(), m.weights().end());
    return rep;
  };
  std::vector<double> w1, w2;
  const auto a = run(w1), b = run(w2);
  CHECK(a.trajectory == b.trajectory);
  CHECK(w1 == w2);
  CHECK(a.final_loss == b.final_loss);
}

TEST_CASE("small-step gradient descent never increases a convex loss") {
  Dataset ds = linear_data(60, 4, 0.7, 6);
  Model m(Architecture::linear(4, 1), InitScheme::glorot_uniform, 6);
  auto lik = LikelihoodSpec::make(Family::normal);
  FitConfig cfg;
  cfg.optimizer.kind = OptimizerKind::sgd;
  cfg.optimizer.lr = 0.01;
  cfg.clip_norm = std::numeric_limits<double>::infinity();
  cfg.steps = 500;
  const auto rep = fit(m, lik, ds, cfg);
  for (std::size_t i = 1; i < rep.trajectory.size(); ++i) CHECK(rep.trajectory[i] <= rep.trajectory[i - 1]);
}

TEST_CASE("a learned scale does not hurt clean linear data") {
  for (std::uint64_t seed : {1, 2, 3}) {
    Dataset all = linear_data(250, 5, 0.5, 10 + seed);
    std::vector<std::size_t> tr(200), te(50);
    for (std::size_t i = 0; i < 200; ++i) tr[i] = i;
    for (std::size_t i = 0; i < 50; ++i) te[i] = 200 + i;
    const Dataset train = all.subset(tr), test = all.subset(te);
    FitConfig cfg;
    cfg.optimizer.lr = 0.01;
    cfg.seed = seed;
    Model fixed(Architecture::linear(5, 1), InitScheme::glorot_uniform, seed), joint = fixed;
    auto l1 = LikelihoodSpec::make(Family::normal);
    auto l2 = LikelihoodSpec::make(Family::normal);
    l2.slot("sigma").make_global(1.0);
    const auto r1 = fit(fixed, l1, train, cfg, &test);
    const auto r2 = fit(joint, l2, train, cfg, &test);
    CHECK(*r2.test_mse <= 1.05 * *r1.test_mse);
  }
}

TEST_CASE("divergence is reported with the last finite step") {
  Dataset ds = linear_data(20, 2, 1.0, 7);
  Model m(Architecture::linear(2, 1), InitScheme::glorot_uniform, 7);
  auto lik = LikelihoodSpec::make(Family::normal);
  FitConfig cfg;
  cfg.optimizer.kind = OptimizerKind::sgd;
  cfg.optimizer.lr = 1e3;
  cfg.clip_norm = std::numeric_limits<double>::infinity();
  cfg.steps = 1000;
  try {
    fit(m, lik, ds, cfg);
    FAIL("expected divergence");
  } catch (const Diverged& e) {
    CHECK(std::isfinite(e.last_finite_loss()));
    CHECK(e.last_finite_step() < 1000);
  }
}

TEST_CASE("report accounting") {
  Dataset ds = linear_data(30, 3, 1.0, 8);
  Model m(Architecture::mlp(3, {4}, 1), InitScheme::he, 8);
  auto lik = LikelihoodSpec::make(Family::normal);
  lik.slot("sigma").make_data(30, 1.0);
  FitConfig cfg;
  cfg.steps = 25;
  cfg.trajectory_stride = 5;
  const auto rep = fit(m, lik, ds, cfg);
  CHECK(rep.model_parameters == m.num_weights());
  CHECK(rep.likelihood_parameters == 30);
  CHECK(rep.trajectory.size() == 5);
  CHECK(rep.slots.at(0).conditioning == "data");
  CHECK(rep.slots.at(0).space == "O(pn)");
}

TEST_CASE("predicted temperature helps on the flipped-label cluster") {
  const Dataset train = gen_outlier_classification(400, 0.1, 3);
  const Dataset test = gen_outlier_classification(400, 0.0, 1003);
  FitConfig cfg;
  cfg.optimizer.lr = 0.01;
  cfg.likelihood_lr_multiplier = 1.0;
  cfg.seed = 3;
  auto accuracy_of = [&](bool predicted) {
    Model m(Architecture::linear(2, 2), InitScheme::glorot_uniform, 3);
    auto lik = LikelihoodSpec::make(Family::softmax);
    if (predicted) lik.slot("tau").make_predicted(Architecture::linear(2, 1), true, 1.0, 3);
    return *fit(m, lik, train, cfg, &test).test_accuracy;
  };
  CHECK(accuracy_of(true) >= accuracy_of(false));
}

}  // TEST_SUITE
