#pragma once

// Closed-form and coordinate-descent solvers for linear regression with the
// classical fixed-strength penalties, used as baselines for learned priors.

#include <vector>

#include "fulllik/dataset.hpp"

namespace fulllik {

struct LinearFit {
  std::vector<double> weights;
  double intercept = 0.0;
};

/// Ordinary least squares.
LinearFit ols(const Matrix& x, std::span<const double> y, bool intercept = true);
/// Minimizes sum (y - x w - c)^2 + lambda |w|^2 (intercept unpenalized).
LinearFit ridge(const Matrix& x, std::span<const double> y, double lambda, bool intercept = true);
/// Minimizes sum (y - x w - c)^2 + lambda |w|_1 by cyclic coordinate descent
/// (intercept unpenalized). `warm` seeds the weights when non-empty.
LinearFit lasso(const Matrix& x, std::span<const double> y, double lambda, bool intercept = true,
                std::span<const double> warm = {}, double tol = 1e-10, std::size_t max_sweeps = 100000);

/// n points log-spaced on [lo, hi].
std::vector<double> log_grid(double lo, double hi, std::size_t n);

}  // namespace fulllik
