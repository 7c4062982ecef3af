#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "../support/oracles.hpp"
#include "fulllik/errors.hpp"
#include "fulllik/likelihood.hpp"
#include "fulllik/rng.hpp"

using namespace fulllik;
using doctest::Approx;

TEST_SUITE("likelihood") {

TEST_CASE("normal NLL values") {
  CHECK(normal_nll(0.0, {1.0}) == Approx(0.918939).epsilon(1e-6));
  CHECK(normal_nll(1.0, {1.0}) == Approx(1.418939).epsilon(1e-6));
  CHECK(normal_nll(2.0, {2.0}) == Approx(-std::log(oracle::normal_density(2.0, 2.0))).epsilon(1e-12));
  CHECK_THROWS_AS(normal_nll(NAN, {1.0}), InvalidArgument);
  CHECK_THROWS_AS(normal_nll(1.0, {0.0}), Error);
}

TEST_CASE("normal NLL offset from zero residual at unit scale is r^2/2") {
  Rng rng(1, "t/normal-offset");
  for (int i = 0; i < 200; ++i) {
    const double r = rng.uniform(-10, 10);
    CHECK(normal_nll(r, {1.0}) - normal_nll(0.0, {1.0}) == Approx(0.5 * r * r).epsilon(1e-12));
  }
}

TEST_CASE("normal gradients") {
  // Stationary in the variance when the residual equals the scale.
  for (double s : {0.3, 1.0, 4.0}) CHECK(std::abs(normal_nll_grads(s, {s}).d_sigma_sq) < 1e-12);
  // At r = 0, sigma = 1 the NLL falls as the variance shrinks.
  CHECK(normal_nll_grads(0.0, {1.0}).d_sigma_sq == Approx(0.5));
  Rng rng(2, "t/normal-fd");
  for (int i = 0; i < 300; ++i) {
    const double r = rng.uniform(-3, 3), s = rng.uniform(0.2, 3);
    const auto g = normal_nll_grads(r, {s});
    CHECK(oracle::rel_err(g.d_residual, oracle::central_diff([&](double x) { return normal_nll(x, {s}); }, r)) < 1e-5);
    CHECK(oracle::rel_err(g.d_sigma_sq, oracle::central_diff(
                                            [&](double v) { return normal_nll(r, {std::sqrt(v)}); }, s * s)) < 1e-5);
    CHECK(oracle::rel_err(g.d_sigma, oracle::central_diff([&](double x) { return normal_nll(r, {x}); }, s)) < 1e-5);
  }
}

TEST_CASE("softmax NLL values") {
  const std::vector<double> z0{0.0, 0.0}, z1{1.0, 0.0};
  CHECK(softmax_nll(z0, {1.0}, 0) == Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(softmax_nll(z1, {2.0}, 0) == Approx(0.126928).epsilon(1e-5));
  CHECK(softmax_nll(z1, {2.0}, 0) == Approx(-2.0 + std::log(std::exp(2.0) + 1.0)).epsilon(1e-12));
  CHECK_THROWS_AS(softmax_nll(std::vector<double>{}, {1.0}, 0), InvalidArgument);
  CHECK_THROWS_AS(softmax_nll(z1, {1.0}, 2), InvalidArgument);
  // Overflow safety.
  const std::vector<double> big{1000.0, 0.0};
  CHECK(std::isfinite(softmax_nll(big, {1.0}, 1)));
  CHECK(softmax_nll(big, {1.0}, 1) == Approx(1000.0));
}

TEST_CASE("unit-temperature softmax NLL is cross-entropy") {
  Rng rng(3, "t/ce");
  for (int i = 0; i < 300; ++i) {
    std::vector<double> z(2 + rng.below(6));
    for (auto& v : z) v = rng.normal(0, 5);
    const auto y = static_cast<std::size_t>(rng.below(z.size()));
    CHECK(std::abs(softmax_nll(z, {1.0}, y) - oracle::cross_entropy(z, y)) < 1e-12);
  }
}

TEST_CASE("temperature gradient") {
  CHECK(softmax_temp_grad(std::vector<double>{0.7, 0.7, 0.7}, {1.3}, 1) == Approx(0.0));
  const std::vector<double> z1{1.0, 0.0};
  CHECK(softmax_temp_grad(z1, {1.0}, 0) == Approx(-1.0 + std::exp(1.0) / (std::exp(1.0) + 1.0)).epsilon(1e-12));
  CHECK(softmax_temp_grad(z1, {1.0}, 0) == Approx(-0.268941).epsilon(1e-5));
  Rng rng(4, "t/tau-fd");
  for (int i = 0; i < 300; ++i) {
    std::vector<double> z(2 + rng.below(4));
    for (auto& v : z) v = rng.normal(0, 2);
    const auto y = static_cast<std::size_t>(rng.below(z.size()));
    const double tau = rng.uniform(0.3, 3);
    const double fd = oracle::central_diff([&](double t) { return softmax_nll(z, {t}, y); }, tau);
    CHECK(oracle::rel_err(softmax_temp_grad(z, {tau}, y), fd) < 1e-5);
    const auto g = softmax_nll_grads(z, {tau}, y);
    for (std::size_t c = 0; c < z.size(); ++c) {
      const double fdz = oracle::central_diff(
          [&](double v) {
            auto zz = z;
            zz[c] = v;
            return softmax_nll(zz, {tau}, y);
          },
          z[c]);
      CHECK(oracle::rel_err(g.d_logits[c], fdz) < 1e-5);
    }
  }
}

TEST_CASE("robust loss values") {
  for (double a : {0.0, 0.5, 1.0, 2.0, 3.0}) CHECK(robust_rho(0.0, {a, 1.7}) == 0.0);
  CHECK(robust_rho(2.0, {2.0, 1.0}) == Approx(2.0).epsilon(1e-12));
  CHECK(robust_rho(1.0, {1.0, 1.0}) == Approx(std::sqrt(2.0) - 1.0).epsilon(1e-12));
  CHECK_THROWS(robust_rho(NAN, {1.0, 1.0}));
  Rng rng(5, "t/rho");
  for (int i = 0; i < 300; ++i) {
    const double x = rng.uniform(-20, 20), a = rng.uniform(0, 3), s = rng.uniform(0.1, 3);
    CHECK(robust_rho(x, {a, s}) == Approx(oracle::robust_rho(x, a, s)).epsilon(1e-9));
    CHECK(robust_rho(x, {a, s}) >= 0.0);
  }
}

TEST_CASE("robust log partition") {
  CHECK(robust_log_partition(2.0) == Approx(std::log(std::sqrt(2.0 * std::numbers::pi))).epsilon(1e-12));
  CHECK(robust_log_partition(0.0) == Approx(std::log(std::numbers::pi * std::sqrt(2.0))).epsilon(1e-12));
  CHECK(robust_log_partition(2.0) == Approx(0.918939).epsilon(1e-6));
  CHECK(robust_log_partition(0.0) == Approx(1.491304).epsilon(1e-6));
  for (double a : {0.37, 1.0, 1.55, 2.81}) {
    const double z = oracle::integrate_line([&](double x) { return std::exp(-oracle::robust_rho(x, a, 1.0)); }, 1.0);
    CHECK(std::abs(robust_log_partition(a) - std::log(z)) < 1e-6);
  }
  CHECK_THROWS_AS(robust_log_partition(-0.1), DomainError);
  CHECK_THROWS_AS(robust_log_partition(3.1), DomainError);
}

TEST_CASE("robust NLL") {
  CHECK(robust_nll(0.0, {2.0, 1.0}) == Approx(normal_nll(0.0, {1.0})).epsilon(1e-12));
  CHECK(robust_nll(1.0, {2.0, 1.0}) == Approx(1.418939).epsilon(1e-6));
  CHECK(robust_nll(1.0, {1.0, 1.0}) == Approx(std::sqrt(2.0) - 1.0 + robust_log_partition(1.0)).epsilon(1e-12));
  Rng rng(6, "t/robust-normal");
  for (int i = 0; i < 300; ++i) {
    const double r = rng.uniform(-5, 5), s = rng.uniform(0.1, 4);
    CHECK(std::abs(robust_nll(r, {2.0, s}) - normal_nll(r, {s})) < 1e-9);
  }
}

TEST_CASE("robust density integrates to one") {
  for (double a : {0.0, 0.5, 1.0, 2.0, 3.0})
    for (double s : {0.5, 1.0, 2.0}) {
      const double mass = oracle::integrate_line([&](double x) { return std::exp(-robust_nll(x, {a, s})); }, s);
      CHECK(std::abs(mass - 1.0) < 1e-4);
    }
}

TEST_CASE("robust gradients") {
  Rng rng(7, "t/robust-fd");
  for (double a : {0.3, 1.0, 2.0, 2.7}) CHECK(robust_nll_grads(0.0, {a, 1.3}).d_residual == 0.0);
  for (int i = 0; i < 50; ++i) {
    const double r = rng.uniform(-4, 4);
    CHECK(robust_nll_grads(r, {2.0, 1.0}).d_residual == Approx(r).epsilon(1e-9));
  }
  for (int i = 0; i < 300; ++i) {
    const double r = rng.uniform(-4, 4), a = rng.uniform(0.05, 2.95), s = rng.uniform(0.2, 3);
    const auto g = robust_nll_grads(r, {a, s});
    CHECK(oracle::rel_err(g.d_residual, oracle::central_diff([&](double x) { return robust_nll(x, {a, s}); }, r)) <
          1e-5);
    CHECK(oracle::rel_err(g.d_sigma, oracle::central_diff([&](double x) { return robust_nll(r, {a, x}); }, s)) < 1e-5);
    CHECK(oracle::rel_err(g.d_alpha, oracle::central_diff([&](double x) { return robust_nll(r, {x, s}); }, a)) < 1e-4);
  }
}

TEST_CASE("laplace NLL") {
  CHECK(laplace_nll(0.0, {0.5}) == Approx(0.0));
  CHECK(laplace_nll(1.0, {1.0}) == Approx(1.0 + std::log(2.0)).epsilon(1e-12));
  // Summed NLL over residuals {1, -1, 2} is stationary at b = mean |r| = 4/3.
  auto total_grad = [](double b) {
    double g = 0.0;
    for (double r : {1.0, -1.0, 2.0}) g += laplace_nll_grads(r, {b}).d_b;
    return g;
  };
  CHECK(std::abs(total_grad(4.0 / 3.0)) < 1e-12);
  CHECK(total_grad(1.0) < 0.0);
  CHECK(total_grad(2.0) > 0.0);
  CHECK_THROWS_AS(laplace_nll(INFINITY, {1.0}), InvalidArgument);
}

TEST_CASE("every NLL grows with the residual magnitude") {
  Rng rng(8, "t/monotone");
  for (int i = 0; i < 200; ++i) {
    const double r = rng.uniform(0.01, 5), dr = rng.uniform(0.01, 1);
    const double s = rng.uniform(0.2, 3), a = rng.uniform(0, 3);
    for (double sign : {-1.0, 1.0}) {
      CHECK(normal_nll(sign * (r + dr), {s}) > normal_nll(sign * r, {s}));
      CHECK(laplace_nll(sign * (r + dr), {s}) > laplace_nll(sign * r, {s}));
      CHECK(robust_nll(sign * (r + dr), {a, s}) > robust_nll(sign * r, {a, s}));
    }
    const std::vector<double> lo{r, 0.0}, hi{r + dr, 0.0};
    CHECK(softmax_nll(hi, {1.0}, 1) > softmax_nll(lo, {1.0}, 1));
  }
}

TEST_CASE("global scale stationarity is the residual RMS") {
  Rng rng(9, "t/rms");
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> r(10 + rng.below(50));
    double ss = 0.0;
    for (auto& v : r) {
      v = rng.normal(0, rng.uniform(0.5, 3));
      ss += v * v;
    }
    const double rms = std::sqrt(ss / static_cast<double>(r.size()));
    double g = 0.0;
    for (double v : r) g += normal_nll_grads(v, {rms}).d_sigma;
    CHECK(std::abs(g) < 1e-9 * static_cast<double>(r.size()));
  }
}

}  // TEST_SUITE
