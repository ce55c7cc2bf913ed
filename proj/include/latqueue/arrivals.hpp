#pragma once

// Per-node arrival distributions. Discrete time draws one batch per slot
// (bernoulli or a finite pmf); continuous time uses a Poisson arrival rate.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "latqueue/rng.hpp"

namespace latqueue {

class ArrivalSpec {
 public:
  enum class Kind { bernoulli, truncated_general, poisson_rate };

  static ArrivalSpec bernoulli(double lambda) {
    if (!(lambda >= 0 && lambda <= 1))
      throw std::invalid_argument("bernoulli mean must lie in [0,1]");
    ArrivalSpec s;
    s.kind_ = Kind::bernoulli;
    s.pmf_ = {1.0 - lambda, lambda};
    s.compute_moments();
    return s;
  }

  // pmf[k] = P(batch = k), k = 0..M; must sum to 1.
  static ArrivalSpec truncated_general(std::vector<double> pmf) {
    if (pmf.empty()) throw std::invalid_argument("pmf must be nonempty");
    double total = 0;
    for (double p : pmf) {
      if (p < 0) throw std::invalid_argument("pmf entries must be nonnegative");
      total += p;
    }
    if (std::abs(total - 1.0) > 1e-12) throw std::invalid_argument("pmf must sum to 1");
    ArrivalSpec s;
    s.kind_ = Kind::truncated_general;
    s.pmf_ = std::move(pmf);
    s.compute_moments();
    return s;
  }

  static ArrivalSpec poisson_rate(double lambda) {
    if (!(lambda >= 0)) throw std::invalid_argument("poisson rate must be nonnegative");
    ArrivalSpec s;
    s.kind_ = Kind::poisson_rate;
    s.rate_ = lambda;
    // Raw moments of a Poisson(lambda) count.
    s.moments_[0] = lambda;
    s.moments_[1] = lambda + lambda * lambda;
    s.moments_[2] = lambda * lambda * lambda + 3 * lambda * lambda + lambda;
    return s;
  }

  Kind kind() const { return kind_; }
  double mean() const { return moments_[0]; }
  double rate() const {
    if (kind_ != Kind::poisson_rate) throw std::logic_error("rate() needs a poisson spec");
    return rate_;
  }

  double moment(int order) const {
    if (order < 1 || order > 3)
      throw std::invalid_argument("arrival moments supported for orders 1..3");
    return moments_[order - 1];
  }

  std::int64_t truncation_level() const {
    if (kind_ == Kind::poisson_rate) throw std::logic_error("poisson arrivals are unbounded");
    return static_cast<std::int64_t>(pmf_.size()) - 1;
  }

  const std::vector<double>& pmf() const {
    if (kind_ == Kind::poisson_rate) throw std::logic_error("poisson arrivals have no slot pmf");
    return pmf_;
  }

  // One slot draw by inverse cdf; exactly one uniform consumed.
  std::int64_t sample(Stream& stream) const {
    if (kind_ == Kind::poisson_rate)
      throw std::logic_error("poisson arrivals are event-driven, not slotted");
    double u = stream.uniform01();
    double acc = 0;
    for (std::size_t k = 0; k + 1 < pmf_.size(); ++k) {
      acc += pmf_[k];
      if (u < acc) return static_cast<std::int64_t>(k);
    }
    return static_cast<std::int64_t>(pmf_.size()) - 1;
  }

 private:
  void compute_moments() {
    for (int r = 1; r <= 3; ++r) {
      double m = 0;
      for (std::size_t k = 0; k < pmf_.size(); ++k)
        m += pmf_[k] * std::pow(static_cast<double>(k), r);
      moments_[r - 1] = m;
    }
  }

  Kind kind_ = Kind::bernoulli;
  std::vector<double> pmf_;
  double rate_ = 0;
  double moments_[3] = {0, 0, 0};
};

}  // namespace latqueue
