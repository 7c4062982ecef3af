#pragma once

// Negative log-likelihoods of the four supported families and their analytic
// gradients. Every NLL carries its full normalizing constant, so values are
// true negative log-densities (or log-probabilities for the softmax).

#include <cstddef>
#include <span>
#include <vector>

namespace fulllik {

inline constexpr double kHalfLogTwoPi = 0.91893853320467274178;

/// Smallest robust scale accepted.
inline constexpr double kMinRobustSigma = 1e-8;
/// Robust shape range.
inline constexpr double kMinRobustAlpha = 0.0;
inline constexpr double kMaxRobustAlpha = 3.0;

/// Normal likelihood; `sigma` is the standard deviation.
struct NormalParams {
  double sigma = 1.0;
};

/// Softmax likelihood; logits are multiplied by `tau` before normalizing.
struct SoftmaxParams {
  double tau = 1.0;
};

/// General robust likelihood with shape `alpha` in [0, 3] and scale `sigma`.
struct RobustParams {
  double alpha = 2.0;
  double sigma = 1.0;
};

/// Laplace likelihood with scale `b`.
struct LaplaceParams {
  double b = 1.0;
};

struct NormalGrads {
  double d_residual = 0.0;
  /// Derivative with respect to the variance sigma^2.
  double d_sigma_sq = 0.0;
  /// Same derivative chain-ruled to the standard deviation.
  double d_sigma = 0.0;
};

struct SoftmaxGrads {
  std::vector<double> d_logits;
  double d_tau = 0.0;
};

struct RobustGrads {
  double d_residual = 0.0;
  double d_alpha = 0.0;
  double d_sigma = 0.0;
};

struct LaplaceGrads {
  double d_residual = 0.0;
  double d_b = 0.0;
};

double normal_nll(double residual, NormalParams params);
NormalGrads normal_nll_grads(double residual, NormalParams params);

double softmax_nll(std::span<const double> logits, SoftmaxParams params, std::size_t target);
double softmax_temp_grad(std::span<const double> logits, SoftmaxParams params, std::size_t target);
SoftmaxGrads softmax_nll_grads(std::span<const double> logits, SoftmaxParams params,
                               std::size_t target);
/// Probabilities softmax(z * tau), computed with max subtraction.
std::vector<double> softmax_probs(std::span<const double> logits, double tau = 1.0);

/// The robust loss rho(x, alpha, sigma). The removable singularities at
/// alpha = 2 and alpha = 0 are evaluated through their limit forms.
double robust_rho(double x, RobustParams params);

/// log Z(alpha) where Z(alpha) = integral of exp(-rho(x, alpha, 1)) dx.
/// Looked up from a monotone cubic interpolant over a quadrature grid; exact at
/// alpha = 0 and alpha = 2.
double robust_log_partition(double alpha);
/// Derivative of robust_log_partition (derivative of the interpolant).
double robust_log_partition_deriv(double alpha);

double robust_nll(double residual, RobustParams params);
RobustGrads robust_nll_grads(double residual, RobustParams params);

double laplace_nll(double residual, LaplaceParams params);
LaplaceGrads laplace_nll_grads(double residual, LaplaceParams params);

namespace detail {
/// Direct quadrature of Z(alpha), bypassing the interpolation grid. Used to
/// build the grid and exposed for diagnostics.
double robust_partition_quadrature(double alpha);
/// Number of alpha nodes in the log Z grid.
inline constexpr std::size_t kPartitionGridSize = 256;
}  // namespace detail

}  // namespace fulllik
