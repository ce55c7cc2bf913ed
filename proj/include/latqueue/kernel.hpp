#pragma once

// Interference kernel a_j on Z^d: finite symmetric support, a_0 = 1.

#include <cstdint>
#include <cstdlib>
#include <map>
#include <stdexcept>
#include <vector>

namespace latqueue {

using Offset = std::vector<std::int64_t>;

class InterferenceKernel {
 public:
  // `coeffs` maps offsets to weights; entries with weight 0 are dropped.
  // The zero offset must be present with weight 1 and every offset must have
  // its mirror at the same weight.
  InterferenceKernel(int dimension, std::map<Offset, double> coeffs)
      : dimension_(dimension) {
    if (dimension < 1) throw std::invalid_argument("kernel dimension must be >= 1");
    for (auto& [off, a] : coeffs) {
      if (static_cast<int>(off.size()) != dimension)
        throw std::invalid_argument("kernel offset arity does not match dimension");
      if (a < 0) throw std::invalid_argument("kernel coefficients must be nonnegative");
      if (a == 0) continue;
      support_[off] = a;
    }
    const Offset zero(dimension, 0);
    auto self = support_.find(zero);
    if (self == support_.end() || std::abs(self->second - 1.0) > 1e-12)
      throw std::invalid_argument("kernel requires a_0 = 1");
    for (const auto& [off, a] : support_) {
      Offset mirror(off.size());
      for (std::size_t k = 0; k < off.size(); ++k) mirror[k] = -off[k];
      auto it = support_.find(mirror);
      if (it == support_.end() || std::abs(it->second - a) > 1e-12)
        throw std::invalid_argument("kernel must be symmetric: a_j = a_{-j}");
      for (std::size_t k = 0; k < off.size(); ++k)
        radius_ = std::max(radius_, std::abs(off[k]));
      sum_ += a;
    }
  }

  // Nearest-neighbour 0/1 kernel: self plus the 2d unit offsets.
  static InterferenceKernel nearest_neighbor(int dimension) {
    std::map<Offset, double> c;
    c[Offset(dimension, 0)] = 1.0;
    for (int k = 0; k < dimension; ++k) {
      Offset e(dimension, 0);
      e[k] = 1;
      c[e] = 1.0;
      e[k] = -1;
      c[e] = 1.0;
    }
    return InterferenceKernel(dimension, std::move(c));
  }

  static InterferenceKernel self_only(int dimension) {
    std::map<Offset, double> c;
    c[Offset(dimension, 0)] = 1.0;
    return InterferenceKernel(dimension, std::move(c));
  }

  int dimension() const { return dimension_; }
  // Chebyshev radius of the support.
  std::int64_t radius() const { return radius_; }
  double sum() const { return sum_; }
  const std::map<Offset, double>& support() const { return support_; }

  bool is_nearest_neighbor() const {
    if (support_.size() != 1 + 2 * static_cast<std::size_t>(dimension_)) return false;
    for (const auto& [off, a] : support_) {
      if (std::abs(a - 1.0) > 1e-12) return false;
      std::int64_t l1 = 0;
      for (auto c : off) l1 += std::abs(c);
      if (l1 > 1) return false;
    }
    return true;
  }

 private:
  int dimension_;
  std::map<Offset, double> support_;
  std::int64_t radius_ = 0;
  double sum_ = 0;
};

}  // namespace latqueue
