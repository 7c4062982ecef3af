#pragma once

#include <span>
#include <vector>

namespace fulllik {

/// Weighted least-squares nondecreasing fit of `y` in index order by
/// pool-adjacent-violators. Unit weights when `w` is empty.
std::vector<double> pav(std::span<const double> y, std::span<const double> w = {});

/// A nondecreasing step function fitted on (x, y) pairs. Equal x values are
/// pooled before PAV. Queries below the first knot take the first level;
/// otherwise the level of the last knot at or below the query.
class IsotonicFit {
 public:
  IsotonicFit() = default;
  IsotonicFit(std::span<const double> x, std::span<const double> y, std::span<const double> w = {});

  double operator()(double v) const;
  const std::vector<double>& knots() const { return knots_; }
  const std::vector<double>& levels() const { return levels_; }

 private:
  std::vector<double> knots_;
  std::vector<double> levels_;
};

}  // namespace fulllik
