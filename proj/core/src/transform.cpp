#include "fulllik/transform.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "fulllik/errors.hpp"

namespace fulllik {
namespace {

double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// Inverse of softplus for v > 0: log(e^v - 1).
double softplus_inverse(double v) {
  return v > 30.0 ? v + std::log1p(-std::exp(-v)) : std::log(std::expm1(v));
}

double raw_forward(const TransformSpec& t, double x) {
  switch (t.kind) {
    case TransformSpec::Kind::shifted_softplus:
      return (softplus(x) + t.shift) / (std::numbers::ln2 + t.shift);
    case TransformSpec::Kind::affine_sigmoid:
      return t.lo + (t.hi - t.lo) * sigmoid(x);
    case TransformSpec::Kind::exp:
      return std::exp(x);
    case TransformSpec::Kind::identity:
      return x;
  }
  return x;
}

}  // namespace

TransformSpec TransformSpec::shifted_softplus(double s) {
  if (!(s >= 0.0) || !std::isfinite(s)) throw InvalidArgument("softplus shift must be >= 0");
  TransformSpec t;
  t.kind = Kind::shifted_softplus;
  t.shift = s;
  return t;
}

TransformSpec TransformSpec::affine_sigmoid(double lo, double hi) {
  if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi))
    throw InvalidArgument("affine sigmoid requires lo < hi");
  TransformSpec t;
  t.kind = Kind::affine_sigmoid;
  t.lo = lo;
  t.hi = hi;
  return t;
}

TransformSpec TransformSpec::exp() {
  TransformSpec t;
  t.kind = Kind::exp;
  return t;
}

TransformSpec TransformSpec::identity() { return TransformSpec{}; }

TransformSpec TransformSpec::with_floor(double value) const {
  TransformSpec t = *this;
  t.floor = value;
  return t;
}

double TransformSpec::lower_bound() const {
  double b = -std::numeric_limits<double>::infinity();
  switch (kind) {
    case Kind::shifted_softplus: b = shift / (std::numbers::ln2 + shift); break;
    case Kind::affine_sigmoid: b = lo; break;
    case Kind::exp: b = 0.0; break;
    case Kind::identity: break;
  }
  return std::max(b, floor);
}

double TransformSpec::upper_bound() const {
  return kind == Kind::affine_sigmoid ? hi : std::numeric_limits<double>::infinity();
}

bool TransformSpec::in_codomain(double y) const {
  return std::isfinite(y) && y > lower_bound() && y < upper_bound();
}

double forward(const TransformSpec& t, double x) {
  return std::max(raw_forward(t, x), t.floor);
}

double forward_grad(const TransformSpec& t, double x) {
  if (raw_forward(t, x) < t.floor) return 0.0;
  switch (t.kind) {
    case TransformSpec::Kind::shifted_softplus:
      return sigmoid(x) / (std::numbers::ln2 + t.shift);
    case TransformSpec::Kind::affine_sigmoid: {
      const double s = sigmoid(x);
      return (t.hi - t.lo) * s * (1.0 - s);
    }
    case TransformSpec::Kind::exp:
      return std::exp(x);
    case TransformSpec::Kind::identity:
      return 1.0;
  }
  return 1.0;
}

double inverse(const TransformSpec& t, double y) {
  if (!t.in_codomain(y)) throw DomainError("value outside the transform codomain");
  switch (t.kind) {
    case TransformSpec::Kind::shifted_softplus:
      return softplus_inverse(y * (std::numbers::ln2 + t.shift) - t.shift);
    case TransformSpec::Kind::affine_sigmoid: {
      const double u = (y - t.lo) / (t.hi - t.lo);
      return std::log(u) - std::log1p(-u);
    }
    case TransformSpec::Kind::exp:
      return std::log(y);
    case TransformSpec::Kind::identity:
      return y;
  }
  return y;
}

namespace transforms {
TransformSpec variance() { return TransformSpec::shifted_softplus(0.01); }
TransformSpec temperature() { return TransformSpec::shifted_softplus(0.2); }
TransformSpec robust_shape() { return TransformSpec::affine_sigmoid(0.0, 3.0); }
TransformSpec robust_scale() { return TransformSpec::shifted_softplus(0.01).with_floor(1e-8); }
TransformSpec prior_scale() { return TransformSpec::exp().with_floor(1e-6); }
}  // namespace transforms

}  // namespace fulllik
