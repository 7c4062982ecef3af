#include "fulllik/linear_solvers.hpp"

#include <cmath>

#include "fulllik/errors.hpp"

namespace fulllik {
namespace {

struct Centered {
  Matrix x;
  Eigen::VectorXd y;
  Eigen::RowVectorXd x_mean;
  double y_mean = 0.0;
};

Centered center(const Matrix& x, std::span<const double> y, bool intercept) {
  if (static_cast<std::size_t>(x.rows()) != y.size()) throw InvalidArgument("row count mismatch");
  if (x.rows() == 0) throw InvalidArgument("empty design");
  Centered c;
  c.x = x;
  c.y = Eigen::Map<const Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(y.size()));
  c.x_mean = Eigen::RowVectorXd::Zero(x.cols());
  if (intercept) {
    c.x_mean = x.colwise().mean();
    c.y_mean = c.y.mean();
    c.x.rowwise() -= c.x_mean;
    c.y.array() -= c.y_mean;
  }
  return c;
}

LinearFit finish(const Centered& c, const Eigen::VectorXd& w) {
  LinearFit f;
  f.weights.assign(w.data(), w.data() + w.size());
  f.intercept = c.y_mean - c.x_mean.dot(w);
  return f;
}

}  // namespace

LinearFit ols(const Matrix& x, std::span<const double> y, bool intercept) {
  const auto c = center(x, y, intercept);
  const Eigen::VectorXd w = c.x.colPivHouseholderQr().solve(c.y);
  return finish(c, w);
}

LinearFit ridge(const Matrix& x, std::span<const double> y, double lambda, bool intercept) {
  if (!(lambda >= 0.0)) throw InvalidArgument("ridge lambda must be non-negative");
  if (lambda == 0.0) return ols(x, y, intercept);
  const auto c = center(x, y, intercept);
  Eigen::MatrixXd gram = c.x.transpose() * c.x;
  gram.diagonal().array() += lambda;
  const Eigen::VectorXd w = gram.ldlt().solve(c.x.transpose() * c.y);
  return finish(c, w);
}

LinearFit lasso(const Matrix& x, std::span<const double> y, double lambda, bool intercept,
                std::span<const double> warm, double tol, std::size_t max_sweeps) {
  if (!(lambda >= 0.0)) throw InvalidArgument("lasso lambda must be non-negative");
  const auto c = center(x, y, intercept);
  const Eigen::Index d = c.x.cols();
  Eigen::VectorXd w = Eigen::VectorXd::Zero(d);
  if (!warm.empty()) {
    if (static_cast<Eigen::Index>(warm.size()) != d) throw InvalidArgument("warm start length mismatch");
    for (Eigen::Index j = 0; j < d; ++j) w(j) = warm[static_cast<std::size_t>(j)];
  }
  const Eigen::MatrixXd xc = c.x;  // column-major for column access
  const Eigen::VectorXd col_sq = xc.colwise().squaredNorm();
  Eigen::VectorXd resid = c.y - xc * w;
  // Coordinate update for sum r^2 + lambda |w_j|: soft-threshold at lambda / 2.
  const double thresh = 0.5 * lambda;
  for (std::size_t sweep = 0; sweep < max_sweeps; ++sweep) {
    double max_delta = 0.0;
    for (Eigen::Index j = 0; j < d; ++j) {
      if (col_sq(j) == 0.0) continue;
      const double rho = xc.col(j).dot(resid) + col_sq(j) * w(j);
      const double next = (rho > thresh ? rho - thresh : (rho < -thresh ? rho + thresh : 0.0)) / col_sq(j);
      const double delta = next - w(j);
      if (delta != 0.0) {
        resid -= delta * xc.col(j);
        w(j) = next;
        max_delta = std::max(max_delta, std::abs(delta));
      }
    }
    if (max_delta < tol) break;
  }
  return finish(c, w);
}

std::vector<double> log_grid(double lo, double hi, std::size_t n) {
  if (!(lo > 0.0 && hi > lo) || n < 2) throw InvalidArgument("log grid needs 0 < lo < hi and n >= 2");
  std::vector<double> g(n);
  const double a = std::log(lo), b = std::log(hi);
  for (std::size_t i = 0; i < n; ++i) g[i] = std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1));
  return g;
}

}  // namespace fulllik
