#pragma once

// Bijections between the unconstrained optimization space and the constrained
// domains of likelihood parameters.

#include <limits>

namespace fulllik {

struct TransformSpec {
  enum class Kind { shifted_softplus, affine_sigmoid, exp, identity };

  Kind kind = Kind::identity;
  double shift = 0.0;  // shifted_softplus offset s
  double lo = 0.0;     // affine_sigmoid bounds
  double hi = 1.0;
  /// Optional hard floor applied after the map; the gradient is zero where it
  /// binds. -inf disables it.
  double floor = -std::numeric_limits<double>::infinity();

  static TransformSpec shifted_softplus(double s);
  static TransformSpec affine_sigmoid(double lo, double hi);
  static TransformSpec exp();
  static TransformSpec identity();
  TransformSpec with_floor(double value) const;

  /// Infimum / supremum of the codomain (open bounds).
  double lower_bound() const;
  double upper_bound() const;
  bool in_codomain(double y) const;
};

/// (log(1 + e^x) + s) / (log 2 + s); equals 1 at x = 0.
double forward(const TransformSpec& t, double x);
double inverse(const TransformSpec& t, double y);
double forward_grad(const TransformSpec& t, double x);

/// Defaults used across the toolkit.
namespace transforms {
TransformSpec variance();       // shifted softplus, s = 0.01
TransformSpec temperature();    // shifted softplus, s = 0.2
TransformSpec robust_shape();   // affine sigmoid onto [0, 3]
TransformSpec robust_scale();   // shifted softplus, s = 0.01, floor 1e-8
TransformSpec prior_scale();    // exp, floor 1e-6
}  // namespace transforms

}  // namespace fulllik
