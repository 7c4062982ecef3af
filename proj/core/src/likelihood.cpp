#include "fulllik/likelihood.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fulllik/errors.hpp"

namespace fulllik {
namespace {

constexpr double kSingularityBand = 1e-4;

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw InvalidArgument(std::string("non-finite ") + what);
}

void require_positive(double v, const char* what) {
  require_finite(v, what);
  if (!(v > 0.0)) throw InvalidArgument(std::string(what) + " must be positive");
}

void check_robust(double x, const RobustParams& p) {
  require_finite(x, "residual");
  require_finite(p.alpha, "alpha");
  require_finite(p.sigma, "sigma");
  if (p.alpha < kMinRobustAlpha || p.alpha > kMaxRobustAlpha)
    throw DomainError("robust alpha outside [0, 3]");
  if (p.sigma < kMinRobustSigma) throw InvalidArgument("robust sigma below 1e-8");
}

void check_softmax(std::span<const double> logits, const SoftmaxParams& p, std::size_t target) {
  if (logits.empty()) throw InvalidArgument("softmax logits are empty");
  if (target >= logits.size()) throw InvalidArgument("softmax target out of range");
  require_positive(p.tau, "tau");
  for (double z : logits) require_finite(z, "logit");
}

// log sum_c exp(z_c * tau) with the max-subtraction trick.
double log_sum_exp_scaled(std::span<const double> logits, double tau) {
  double m = -std::numeric_limits<double>::infinity();
  for (double z : logits) m = std::max(m, z * tau);
  double s = 0.0;
  for (double z : logits) s += std::exp(z * tau - m);
  return m + std::log(s);
}

}  // namespace

double normal_nll(double residual, NormalParams params) {
  require_finite(residual, "residual");
  require_positive(params.sigma, "sigma");
  const double z = residual / params.sigma;
  return kHalfLogTwoPi + std::log(params.sigma) + 0.5 * z * z;
}

NormalGrads normal_nll_grads(double residual, NormalParams params) {
  require_finite(residual, "residual");
  require_positive(params.sigma, "sigma");
  const double var = params.sigma * params.sigma;
  NormalGrads g;
  g.d_residual = residual / var;
  g.d_sigma_sq = (0.5 / var) * (1.0 - residual * residual / var);
  g.d_sigma = 2.0 * params.sigma * g.d_sigma_sq;
  return g;
}

std::vector<double> softmax_probs(std::span<const double> logits, double tau) {
  if (logits.empty()) throw InvalidArgument("softmax logits are empty");
  require_positive(tau, "tau");
  const double lse = log_sum_exp_scaled(logits, tau);
  std::vector<double> p(logits.size());
  for (std::size_t c = 0; c < logits.size(); ++c) p[c] = std::exp(logits[c] * tau - lse);
  return p;
}

double softmax_nll(std::span<const double> logits, SoftmaxParams params, std::size_t target) {
  check_softmax(logits, params, target);
  return -logits[target] * params.tau + log_sum_exp_scaled(logits, params.tau);
}

double softmax_temp_grad(std::span<const double> logits, SoftmaxParams params,
                         std::size_t target) {
  check_softmax(logits, params, target);
  const auto p = softmax_probs(logits, params.tau);
  double expected = 0.0;
  for (std::size_t c = 0; c < logits.size(); ++c) expected += logits[c] * p[c];
  return -logits[target] + expected;
}

SoftmaxGrads softmax_nll_grads(std::span<const double> logits, SoftmaxParams params,
                               std::size_t target) {
  check_softmax(logits, params, target);
  const auto p = softmax_probs(logits, params.tau);
  SoftmaxGrads g;
  g.d_logits.resize(logits.size());
  double expected = 0.0;
  for (std::size_t c = 0; c < logits.size(); ++c) {
    g.d_logits[c] = params.tau * (p[c] - (c == target ? 1.0 : 0.0));
    expected += logits[c] * p[c];
  }
  g.d_tau = -logits[target] + expected;
  return g;
}

double robust_rho(double x, RobustParams params) {
  check_robust(x, params);
  const double y = (x / params.sigma) * (x / params.sigma);
  const double alpha = params.alpha;
  if (std::abs(alpha - 2.0) < kSingularityBand) return 0.5 * y;
  if (alpha < kSingularityBand) return std::log1p(0.5 * y);
  const double a = std::abs(alpha - 2.0);
  // (a / alpha) * ((y / a + 1)^(alpha / 2) - 1), written with expm1/log1p so
  // small alpha does not cancel.
  return (a / alpha) * std::expm1(0.5 * alpha * std::log1p(y / a));
}

double robust_nll(double residual, RobustParams params) {
  const double rho = robust_rho(residual, params);
  return std::log(params.sigma) + robust_log_partition(params.alpha) + rho;
}

RobustGrads robust_nll_grads(double residual, RobustParams params) {
  check_robust(residual, params);
  const double sigma = params.sigma;
  const double alpha = params.alpha;
  const double y = (residual / sigma) * (residual / sigma);

  // d rho / d x = (x / sigma^2) * q^(alpha/2 - 1), q = y / |alpha - 2| + 1.
  double weight;  // q^(alpha/2 - 1)
  double d_rho_d_alpha;
  if (std::abs(alpha - 2.0) < kSingularityBand) {
    weight = 1.0;
    // rho has an (alpha - 2) log|alpha - 2| term here; report the secant
    // slope across the limit band.
    const double hi = robust_rho(residual, {2.0 + kSingularityBand, sigma});
    const double lo = robust_rho(residual, {2.0 - kSingularityBand, sigma});
    d_rho_d_alpha = (hi - lo) / (2.0 * kSingularityBand);
  } else if (alpha < kSingularityBand) {
    weight = 1.0 / (1.0 + 0.5 * y);
    // Series of rho around alpha = 0.
    const double l0 = std::log1p(0.5 * y);
    d_rho_d_alpha = -0.5 * l0 + 0.25 * l0 * l0 + y / (2.0 * (2.0 + y));
  } else {
    const double a = std::abs(alpha - 2.0);
    const double sg = alpha > 2.0 ? 1.0 : -1.0;
    const double l = std::log1p(y / a);
    weight = std::exp((0.5 * alpha - 1.0) * l);
    const double e = std::expm1(0.5 * alpha * l);
    const double dl = -y * sg / (a * (a + y));
    d_rho_d_alpha = (sg / alpha - a / (alpha * alpha)) * e +
                    (a / alpha) * (e + 1.0) * (0.5 * l + 0.5 * alpha * dl);
  }

  RobustGrads g;
  g.d_residual = residual / (sigma * sigma) * weight;
  g.d_sigma = 1.0 / sigma - y / sigma * weight;
  g.d_alpha = d_rho_d_alpha + robust_log_partition_deriv(alpha);
  return g;
}

double laplace_nll(double residual, LaplaceParams params) {
  require_finite(residual, "residual");
  require_positive(params.b, "b");
  return std::abs(residual) / params.b + std::log(2.0 * params.b);
}

LaplaceGrads laplace_nll_grads(double residual, LaplaceParams params) {
  require_finite(residual, "residual");
  require_positive(params.b, "b");
  LaplaceGrads g;
  g.d_residual = residual > 0.0 ? 1.0 / params.b : (residual < 0.0 ? -1.0 / params.b : 0.0);
  g.d_b = 1.0 / params.b - std::abs(residual) / (params.b * params.b);
  return g;
}

}  // namespace fulllik
