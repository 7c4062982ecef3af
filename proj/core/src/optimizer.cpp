#include "fulllik/optimizer.hpp"

#include <cmath>

#include "fulllik/errors.hpp"

namespace fulllik {

OptimizerState::OptimizerState(OptimizerSettings settings, std::size_t size) : settings_(settings) {
  if (!(settings.lr > 0.0)) throw InvalidArgument("learning rate must be positive");
  if (settings.kind != OptimizerKind::sgd) v_.assign(size, 0.0);
  if (settings.kind == OptimizerKind::adam) m_.assign(size, 0.0);
}

void OptimizerState::step(std::span<double> params, std::span<const double> grads,
                          std::span<const std::uint8_t> touched) {
  if (params.size() != grads.size()) throw InvalidArgument("parameter/gradient size mismatch");
  if (!touched.empty() && touched.size() != params.size())
    throw InvalidArgument("touched mask size mismatch");
  for (double g : grads)
    if (!std::isfinite(g)) throw Diverged("non-finite gradient", t_, NAN);
  ++t_;
  const auto& s = settings_;
  switch (s.kind) {
    case OptimizerKind::sgd:
      for (std::size_t i = 0; i < params.size(); ++i) params[i] -= s.lr * grads[i];
      break;
    case OptimizerKind::adam: {
      if (m_.size() != params.size()) throw InvalidArgument("optimizer state size mismatch");
      const double c1 = 1.0 - std::pow(s.beta1, static_cast<double>(t_));
      const double c2 = 1.0 - std::pow(s.beta2, static_cast<double>(t_));
      for (std::size_t i = 0; i < params.size(); ++i) {
        m_[i] = s.beta1 * m_[i] + (1.0 - s.beta1) * grads[i];
        v_[i] = s.beta2 * v_[i] + (1.0 - s.beta2) * grads[i] * grads[i];
        params[i] -= s.lr * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + s.epsilon);
      }
      break;
    }
    case OptimizerKind::rmsprop_sparse:
      if (v_.size() != params.size()) throw InvalidArgument("optimizer state size mismatch");
      for (std::size_t i = 0; i < params.size(); ++i) {
        if (!touched.empty() && !touched[i]) continue;
        v_[i] = s.decay * v_[i] + (1.0 - s.decay) * grads[i] * grads[i];
        params[i] -= s.lr * grads[i] / (std::sqrt(v_[i]) + s.epsilon);
      }
      break;
  }
}

}  // namespace fulllik
