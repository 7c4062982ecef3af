// log Z(alpha) for the robust likelihood.
//
// Z(alpha) = 2 * integral_0^inf exp(-rho(x, alpha, 1)) dx. The integral is split
// at x = 1; the outer piece is integrated in u = log x, where the integrand
// decays at least like exp(-u) for every alpha in [0, 3]. That keeps the
// heavy alpha -> 0 tail on a bounded domain of length ~30 instead of
// requiring x up to ~1e12.

#include <array>
#include <cmath>
#include <numbers>

#include "fulllik/errors.hpp"
#include "fulllik/likelihood.hpp"

namespace fulllik {
namespace {

constexpr double kUpperLogX = 30.0;  // tail beyond e^30 is < 2e-13 even at alpha = 0
constexpr int kOuterPieces = 120;
constexpr double kQuadTolerance = 1e-15;

template <class F>
double simpson_step(const F& f, double a, double fa, double b, double fb, double m, double fm,
                    double whole, double tol, int depth) {
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return simpson_step(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1) +
         simpson_step(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1);
}

template <class F>
double adaptive_simpson(const F& f, double a, double b, double tol) {
  const double fa = f(a);
  const double fb = f(b);
  const double m = 0.5 * (a + b);
  const double fm = f(m);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return simpson_step(f, a, fa, b, fb, m, fm, whole, tol, 40);
}

struct PartitionGrid {
  std::array<double, detail::kPartitionGridSize> log_z{};
  std::array<double, detail::kPartitionGridSize> slope{};
  double step = 3.0 / static_cast<double>(detail::kPartitionGridSize - 1);

  PartitionGrid() {
    constexpr std::size_t n = detail::kPartitionGridSize;
    for (std::size_t k = 0; k < n; ++k) {
      const double alpha = step * static_cast<double>(k);
      log_z[k] = closed_form_or_quadrature(alpha, k);
    }
    // Fritsch-Carlson style slopes (as in PCHIP): harmonic mean of adjacent
    // secants where they agree in sign, zero otherwise.
    std::array<double, n - 1> secant{};
    for (std::size_t k = 0; k + 1 < n; ++k) secant[k] = (log_z[k + 1] - log_z[k]) / step;
    for (std::size_t k = 1; k + 1 < n; ++k) {
      const double s0 = secant[k - 1];
      const double s1 = secant[k];
      slope[k] = (s0 * s1 <= 0.0) ? 0.0 : 2.0 / (1.0 / s0 + 1.0 / s1);
    }
    slope[0] = end_slope(secant[0], secant[1]);
    slope[n - 1] = end_slope(secant[n - 2], secant[n - 3]);
  }

  static double end_slope(double s0, double s1) {
    // Three-point one-sided estimate, limited to preserve monotonicity.
    double d = 1.5 * s0 - 0.5 * s1;
    if (d * s0 <= 0.0) return 0.0;
    if (s0 * s1 <= 0.0 && std::abs(d) > std::abs(3.0 * s0)) d = 3.0 * s0;
    return d;
  }

  double closed_form_or_quadrature(double alpha, std::size_t k) const {
    if (k == 0) return std::log(std::numbers::pi * std::numbers::sqrt2);
    if (std::abs(alpha - 2.0) < 1e-12) return kHalfLogTwoPi;
    return std::log(detail::robust_partition_quadrature(alpha));
  }

  // Locates the interval and the local coordinate t in [0, 1].
  std::pair<std::size_t, double> locate(double alpha) const {
    constexpr std::size_t n = detail::kPartitionGridSize;
    double pos = alpha / step;
    auto k = static_cast<std::size_t>(pos);
    if (k >= n - 1) k = n - 2;
    return {k, pos - static_cast<double>(k)};
  }

  double value(double alpha) const {
    const auto [k, t] = locate(alpha);
    const double t2 = t * t;
    const double t3 = t2 * t;
    const double h00 = 2 * t3 - 3 * t2 + 1;
    const double h10 = t3 - 2 * t2 + t;
    const double h01 = -2 * t3 + 3 * t2;
    const double h11 = t3 - t2;
    return h00 * log_z[k] + h10 * step * slope[k] + h01 * log_z[k + 1] +
           h11 * step * slope[k + 1];
  }

  double derivative(double alpha) const {
    const auto [k, t] = locate(alpha);
    const double t2 = t * t;
    const double d00 = 6 * t2 - 6 * t;
    const double d10 = 3 * t2 - 4 * t + 1;
    const double d01 = -6 * t2 + 6 * t;
    const double d11 = 3 * t2 - 2 * t;
    return (d00 * log_z[k] + d01 * log_z[k + 1]) / step + d10 * slope[k] + d11 * slope[k + 1];
  }
};

const PartitionGrid& grid() {
  static const PartitionGrid g;
  return g;
}

void check_alpha(double alpha) {
  if (!std::isfinite(alpha)) throw InvalidArgument("non-finite alpha");
  if (alpha < kMinRobustAlpha || alpha > kMaxRobustAlpha)
    throw DomainError("robust alpha outside [0, 3]");
}

}  // namespace

namespace detail {

double robust_partition_quadrature(double alpha) {
  check_alpha(alpha);
  const auto density = [alpha](double x) { return std::exp(-robust_rho(x, {alpha, 1.0})); };
  double inner = 0.0;
  for (int i = 0; i < 8; ++i)
    inner += adaptive_simpson(density, i / 8.0, (i + 1) / 8.0, kQuadTolerance);
  const auto outer_integrand = [&density](double u) {
    const double x = std::exp(u);
    return density(x) * x;
  };
  double outer = 0.0;
  const double piece = kUpperLogX / kOuterPieces;
  for (int i = 0; i < kOuterPieces; ++i)
    outer += adaptive_simpson(outer_integrand, i * piece, (i + 1) * piece, kQuadTolerance);
  return 2.0 * (inner + outer);
}

}  // namespace detail

double robust_log_partition(double alpha) {
  check_alpha(alpha);
  if (alpha == 0.0) return std::log(std::numbers::pi * std::numbers::sqrt2);
  if (alpha == 2.0) return kHalfLogTwoPi;
  return grid().value(alpha);
}

double robust_log_partition_deriv(double alpha) {
  check_alpha(alpha);
  return grid().derivative(alpha);
}

}  // namespace fulllik
