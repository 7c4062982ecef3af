#include "fulllik/priors.hpp"

#include <cmath>
#include <numbers>

#include "fulllik/errors.hpp"
#include "fulllik/likelihood.hpp"

namespace fulllik {

const char* to_string(PriorFamily f) { return f == PriorFamily::normal ? "normal" : "laplace"; }
const char* to_string(PriorGranularity g) { return g == PriorGranularity::dynamic ? "dynamic" : "multi"; }

PriorSpec::PriorSpec(PriorFamily family, PriorGranularity granularity, std::vector<std::size_t> covered,
                     double init_scale, TransformSpec transform)
    : family_(family), granularity_(granularity), covered_(std::move(covered)), transform_(transform) {
  if (covered_.empty()) throw InvalidArgument("prior must cover at least one weight");
  const std::size_t slots = granularity_ == PriorGranularity::dynamic ? 1 : covered_.size();
  store_.assign(slots, inverse(transform_, init_scale));
}

std::vector<std::size_t> PriorSpec::non_bias_indices(const Model& model) {
  const auto mask = model.bias_mask();
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (!mask[i]) idx.push_back(i);
  return idx;
}

void PriorSpec::check_theta(std::span<const double> theta) const {
  for (auto i : covered_)
    if (i >= theta.size()) throw InvalidArgument("prior covers a weight index outside theta");
}

double PriorSpec::scale(std::size_t k) const { return forward(transform_, store_[slot(k)]); }

std::vector<double> PriorSpec::scales() const {
  std::vector<double> s(covered_.size());
  for (std::size_t k = 0; k < s.size(); ++k) s[k] = scale(k);
  return s;
}

std::vector<double> PriorSpec::effective_lambda() const {
  auto s = scales();
  for (double& v : s) v = family_ == PriorFamily::laplace ? 1.0 / v : 1.0 / (v * v);
  return s;
}

double PriorSpec::raw_nll(std::span<const double> theta) const {
  check_theta(theta);
  double total = 0.0;
  for (std::size_t k = 0; k < covered_.size(); ++k) {
    const double s = scale(k);
    const double w = weight_at(theta, k);
    total += family_ == PriorFamily::laplace ? std::abs(w) / s + std::log(s)
                                             : 0.5 * (w / s) * (w / s) + std::log(s);
  }
  return total;
}

double PriorSpec::nll(std::span<const double> theta) const {
  const double per_term = family_ == PriorFamily::laplace ? std::numbers::ln2 : kHalfLogTwoPi;
  return raw_nll(theta) + per_term * static_cast<double>(covered_.size());
}

PriorSpec::Grads PriorSpec::grads(std::span<const double> theta) const {
  check_theta(theta);
  Grads g;
  g.theta.assign(theta.size(), 0.0);
  g.scales.assign(store_.size(), 0.0);
  for (std::size_t k = 0; k < covered_.size(); ++k) {
    const double s = scale(k);
    const double w = weight_at(theta, k);
    double d_scale;
    if (family_ == PriorFamily::laplace) {
      g.theta[covered_[k]] += w > 0.0 ? 1.0 / s : (w < 0.0 ? -1.0 / s : 0.0);
      d_scale = 1.0 / s - std::abs(w) / (s * s);
    } else {
      g.theta[covered_[k]] += w / (s * s);
      d_scale = 1.0 / s - w * w / (s * s * s);
    }
    g.scales[slot(k)] += d_scale * forward_grad(transform_, store_[slot(k)]);
  }
  return g;
}

}  // namespace fulllik
