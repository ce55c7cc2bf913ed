#pragma once

// Service-rate allocations induced by queue lengths. The SIR allocation is
//   psi_i(x) = x_i / sum_j a_{j-i} x_j   (0/0 = 0),
// Shannon rates are log(1 + psi_i), and noisy rates add a constant B to the
// denominator before the log. verify_* sample random witness vectors p and
// check that the SIR-induced rates maximise the weighted utility
// sum_i g(x_i) h(mu_i) over the witness-parameterised allocations.

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "latqueue/rng.hpp"
#include "latqueue/topology.hpp"
#include "latqueue/utility.hpp"

namespace latqueue {

namespace detail {
template <typename T>
inline double interference_at(const Topology& topo, std::size_t i, std::span<const T> x) {
  double acc = 0;
  for (const Neighbor& nb : topo.neighbors(i)) acc += nb.weight * static_cast<double>(x[nb.index]);
  return acc;
}
}  // namespace detail

template <typename T>
std::vector<double> sir_rates(std::span<const T> x, const Topology& topo) {
  if (x.size() != topo.node_count()) throw std::invalid_argument("state size mismatch");
  std::vector<double> psi(x.size(), 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] <= 0) continue;  // 0/0 = 0
    psi[i] = static_cast<double>(x[i]) / detail::interference_at(topo, i, x);
  }
  return psi;
}

inline std::vector<double> sir_rates(const QueueState& x, const Topology& topo) {
  return sir_rates(std::span<const std::int64_t>(x), topo);
}

template <typename T>
std::vector<double> sinr_rates(std::span<const T> x, const Topology& topo, double noise) {
  if (noise < 0) throw std::invalid_argument("noise must be nonnegative");
  if (x.size() != topo.node_count()) throw std::invalid_argument("state size mismatch");
  std::vector<double> out(x.size(), 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] <= 0) continue;
    out[i] = std::log1p(static_cast<double>(x[i]) / (detail::interference_at(topo, i, x) + noise));
  }
  return out;
}

template <typename T>
std::vector<double> shannon_rates(std::span<const T> x, const Topology& topo) {
  return sinr_rates(x, topo, 0.0);
}

inline std::vector<double> shannon_rates(const QueueState& x, const Topology& topo) {
  return shannon_rates(std::span<const std::int64_t>(x), topo);
}

inline std::vector<double> sinr_rates(const QueueState& x, const Topology& topo, double noise) {
  return sinr_rates(std::span<const std::int64_t>(x), topo, noise);
}

struct RateFamily {
  enum class Tag { sir, shannon, sinr };
  Tag tag = Tag::sir;
  double noise = 0;

  double psi_max() const { return tag == Tag::sir ? 1.0 : std::log(2.0); }

  std::vector<double> eval(std::span<const std::int64_t> x, const Topology& topo) const {
    switch (tag) {
      case Tag::sir: return sir_rates(x, topo);
      case Tag::shannon: return shannon_rates(x, topo);
      case Tag::sinr: return sinr_rates(x, topo, noise);
    }
    return {};
  }

  const char* name() const {
    switch (tag) {
      case Tag::sir: return "sir";
      case Tag::shannon: return "shannon";
      case Tag::sinr: return "sinr";
    }
    return "?";
  }
};

// Symmetric stability threshold: the constant arrival mean below which the
// all-equal witness certifies subcriticality.
inline double symmetric_threshold(const InterferenceKernel& kernel) { return 1.0 / kernel.sum(); }

struct FairnessReport {
  double max_violation = -std::numeric_limits<double>::infinity();
  double equality_gap = 0;
  std::size_t trials = 0;
};

namespace detail {
inline double log_uniform(Stream& rng, double lo, double hi) {
  return lo * std::exp(rng.uniform01() * std::log(hi / lo));
}
}  // namespace detail

// Checks sum_i x_i^2 / psi_i(x) <= sum_i x_i^2 / psi_i(p) over random positive
// witnesses p (coordinates log-uniform on [0.01, 100]), terms with x_i = 0
// dropped on both sides. Violations are reported relative to the magnitude of
// the sides; equality_gap is the same residual at p = x.
inline FairnessReport verify_fairness(const QueueState& x, const Topology& topo,
                                      std::size_t trials, Stream& rng) {
  bool any = false;
  for (auto v : x) any = any || v > 0;
  if (!any) throw std::invalid_argument("fairness check needs a nonzero state");
  const auto lhs_of = [&](const std::vector<double>& p) {
    double acc = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (x[i] == 0) continue;
      double denom = detail::interference_at(topo, i, std::span<const double>(p));
      if (p[i] <= 0) return std::numeric_limits<double>::infinity();
      acc += static_cast<double>(x[i]) * static_cast<double>(x[i]) * denom / p[i];
    }
    return acc;
  };
  // Left side through the rate function itself, not the witness formula, so
  // the comparison exercises two independent evaluation routes.
  const std::vector<double> psi = sir_rates(x, topo);
  double at_x = 0;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (x[i] > 0) at_x += static_cast<double>(x[i]) * static_cast<double>(x[i]) / psi[i];
  FairnessReport rep;
  rep.trials = trials;
  std::vector<double> p(x.size());
  for (std::size_t t = 0; t < trials; ++t) {
    for (double& v : p) v = detail::log_uniform(rng, 0.01, 100.0);
    double rhs = lhs_of(p);
    double rel = (at_x - rhs) / std::max({std::abs(at_x), std::abs(rhs), 1.0});
    rep.max_violation = std::max(rep.max_violation, rel);
  }
  // p proportional to x attains the maximum; the witness formula is scale
  // invariant, so any c > 0 works.
  std::vector<double> scaled(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) scaled[i] = 2.5 * static_cast<double>(x[i]);
  double rhs_eq = lhs_of(scaled);
  rep.equality_gap = std::abs(at_x - rhs_eq) / std::max(std::abs(at_x), 1.0);
  return rep;
}

// Same check through the Shannon utility: weighted score
// sum_i x_i^2 * hs(mu_i) with hs(y) = -1/(e^y - 1) must be maximised by the
// Shannon rates of x itself among witness-induced rate vectors.
inline FairnessReport verify_shannon_fairness(const QueueState& x, const Topology& topo,
                                              std::size_t trials, Stream& rng) {
  bool any = false;
  for (auto v : x) any = any || v > 0;
  if (!any) throw std::invalid_argument("fairness check needs a nonzero state");
  const UtilityPair sc = UtilityPair::shannon_companion();
  const auto score_of = [&](const std::vector<double>& rates) {
    double acc = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (x[i] == 0) continue;
      if (!(rates[i] > 0)) return -std::numeric_limits<double>::infinity();
      acc += static_cast<double>(x[i]) * static_cast<double>(x[i]) * sc.h(rates[i]);
    }
    return acc;
  };
  std::vector<double> xd(x.begin(), x.end());
  const double best = score_of(shannon_rates(std::span<const double>(xd), topo));
  FairnessReport rep;
  rep.trials = trials;
  std::vector<double> p(x.size());
  for (std::size_t t = 0; t < trials; ++t) {
    for (double& v : p) v = detail::log_uniform(rng, 0.01, 100.0);
    double other = score_of(shannon_rates(std::span<const double>(p), topo));
    double rel = (other - best) / std::max({std::abs(best), std::abs(other), 1.0});
    rep.max_violation = std::max(rep.max_violation, rel);
  }
  std::vector<double> scaled(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) scaled[i] = 2.5 * static_cast<double>(x[i]);
  double again = score_of(shannon_rates(std::span<const double>(scaled), topo));
  rep.equality_gap = std::abs(best - again) / std::max(std::abs(best), 1.0);
  return rep;
}

}  // namespace latqueue
