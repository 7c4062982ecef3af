#include "fulllik/isotonic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fulllik/errors.hpp"

namespace fulllik {

std::vector<double> pav(std::span<const double> y, std::span<const double> w) {
  if (!w.empty() && w.size() != y.size()) throw InvalidArgument("pav: weight length mismatch");
  struct Block {
    double sum;
    double weight;
    std::size_t len;
  };
  std::vector<Block> blocks;
  blocks.reserve(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double wi = w.empty() ? 1.0 : w[i];
    if (!(wi > 0.0) || !std::isfinite(y[i])) throw InvalidArgument("pav: weights must be positive, values finite");
    blocks.push_back({wi * y[i], wi, 1});
    while (blocks.size() > 1) {
      const auto& b = blocks[blocks.size() - 1];
      const auto& a = blocks[blocks.size() - 2];
      if (a.sum / a.weight <= b.sum / b.weight) break;
      const Block merged{a.sum + b.sum, a.weight + b.weight, a.len + b.len};
      blocks.pop_back();
      blocks.back() = merged;
    }
  }
  std::vector<double> out;
  out.reserve(y.size());
  for (const auto& b : blocks) out.insert(out.end(), b.len, b.sum / b.weight);
  return out;
}

IsotonicFit::IsotonicFit(std::span<const double> x, std::span<const double> y, std::span<const double> w) {
  if (x.size() != y.size() || (!w.empty() && w.size() != x.size()))
    throw InvalidArgument("isotonic: length mismatch");
  if (x.empty()) throw InvalidArgument("isotonic: empty input");
  std::vector<std::size_t> idx(x.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return x[a] < x[b]; });
  std::vector<double> ux, uy, uw;
  for (std::size_t k = 0; k < idx.size();) {
    std::size_t j = k;
    double sw = 0.0, sy = 0.0;
    while (j < idx.size() && x[idx[j]] == x[idx[k]]) {
      const double wi = w.empty() ? 1.0 : w[idx[j]];
      sw += wi;
      sy += wi * y[idx[j]];
      ++j;
    }
    ux.push_back(x[idx[k]]);
    uy.push_back(sy / sw);
    uw.push_back(sw);
    k = j;
  }
  const auto fitted = pav(uy, uw);
  for (std::size_t i = 0; i < ux.size(); ++i) {
    if (i > 0 && fitted[i] == levels_.back()) continue;
    knots_.push_back(ux[i]);
    levels_.push_back(fitted[i]);
  }
}

double IsotonicFit::operator()(double v) const {
  if (knots_.empty()) throw InvalidState("isotonic fit is empty");
  const auto it = std::upper_bound(knots_.begin(), knots_.end(), v);
  if (it == knots_.begin()) return levels_.front();
  return levels_[static_cast<std::size_t>(it - knots_.begin()) - 1];
}

}  // namespace fulllik
