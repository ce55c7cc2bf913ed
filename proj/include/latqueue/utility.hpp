#pragma once

// Utility pairs (g, h): g weights queue lengths, h scores service rates.
// g must be strictly increasing on Z+ with g(y+1)/g(y) -> 1; h must be
// strictly increasing, differentiable and concave on the positive axis.
// Closed-form h' per family feeds the drift and moment-bound machinery.

#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "latqueue/arrivals.hpp"

namespace latqueue {

class UtilityPair {
 public:
  enum class Family { power, quadratic_inverse, exp_log_power, stretched_exp, shannon_companion };

  static UtilityPair power(double alpha) {
    if (!(alpha > 0)) throw std::invalid_argument("power family needs alpha > 0");
    return UtilityPair(Family::power, alpha);
  }
  static UtilityPair quadratic_inverse() { return UtilityPair(Family::quadratic_inverse, 2.0); }
  static UtilityPair exp_log_power(double beta) {
    if (!(beta > 0)) throw std::invalid_argument("exp-log-power family needs beta > 0");
    return UtilityPair(Family::exp_log_power, beta);
  }
  static UtilityPair stretched_exp(double gamma) {
    if (!(gamma > 0 && gamma < 1))
      throw std::invalid_argument("stretched-exp family needs gamma in (0,1)");
    return UtilityPair(Family::stretched_exp, gamma);
  }
  static UtilityPair shannon_companion() { return UtilityPair(Family::shannon_companion, 0.0); }

  Family family() const { return family_; }
  double parameter() const { return param_; }

  double g(std::int64_t y) const {
    if (y < 0) throw std::invalid_argument("g is defined on Z+");
    switch (family_) {
      case Family::power:
        return std::pow(static_cast<double>(y), param_);
      case Family::quadratic_inverse:
      case Family::shannon_companion:
        return static_cast<double>(y) * static_cast<double>(y);
      case Family::exp_log_power:
        return y == 0 ? 0.0 : std::exp(std::pow(std::log(static_cast<double>(y)), param_));
      case Family::stretched_exp:
        return std::exp(std::pow(static_cast<double>(y), param_));
    }
    return 0;
  }

  // log g(y) for y >= 1; avoids overflow in the growth-condition scan.
  double log_g(std::int64_t y) const {
    if (y < 1) throw std::invalid_argument("log_g needs y >= 1");
    switch (family_) {
      case Family::power:
        return param_ * std::log(static_cast<double>(y));
      case Family::quadratic_inverse:
      case Family::shannon_companion:
        return 2.0 * std::log(static_cast<double>(y));
      case Family::exp_log_power:
        return std::pow(std::log(static_cast<double>(y)), param_);
      case Family::stretched_exp:
        return std::pow(static_cast<double>(y), param_);
    }
    return 0;
  }

  double delta(std::int64_t y) const { return g(y + 1) - g(y); }

  // G(z) = sum_{y=0}^{z} g(y); empty sum for z = -1.
  double big_g(std::int64_t z) const {
    if (z < -1) throw std::invalid_argument("big_g needs z >= -1");
    double acc = 0;
    for (std::int64_t y = 0; y <= z; ++y) acc += g(y);
    return acc;
  }

  double h(double y) const {
    if (!(y > 0)) throw std::invalid_argument("h is evaluated on (0,inf)");
    switch (family_) {
      case Family::power:
        return param_ == 1.0 ? std::log(y) : std::pow(y, 1.0 - param_) / (1.0 - param_);
      case Family::quadratic_inverse:
        return -1.0 / y;
      case Family::exp_log_power:
      case Family::stretched_exp:
        return std::log(y);
      case Family::shannon_companion:
        return -1.0 / std::expm1(y);
    }
    return 0;
  }

  double h_prime(double y) const {
    if (!(y > 0)) throw std::invalid_argument("h' is evaluated on (0,inf)");
    switch (family_) {
      case Family::power:
        return std::pow(y, -param_);
      case Family::quadratic_inverse:
        return 1.0 / (y * y);
      case Family::exp_log_power:
      case Family::stretched_exp:
        return 1.0 / y;
      case Family::shannon_companion: {
        double e = std::expm1(y);
        return std::exp(y) / (e * e);
      }
    }
    return 0;
  }

  // Scan start for the growth-ratio monotonicity check.
  std::int64_t ratio_scan_start() const {
    if (family_ == Family::exp_log_power)
      return static_cast<std::int64_t>(std::ceil(std::exp(param_ - 1.0))) + 1;
    return 1;
  }

  std::string name() const {
    std::ostringstream os;
    switch (family_) {
      case Family::power: os << "power(" << param_ << ")"; break;
      case Family::quadratic_inverse: os << "quadratic-inverse"; break;
      case Family::exp_log_power: os << "exp-log-power(" << param_ << ")"; break;
      case Family::stretched_exp: os << "stretched-exp(" << param_ << ")"; break;
      case Family::shannon_companion: os << "shannon-companion"; break;
    }
    return os.str();
  }

 private:
  UtilityPair(Family f, double p) : family_(f), param_(p) {}
  Family family_;
  double param_;
};

struct ConditionCheck {
  bool ok = true;
  std::string detail;
};

// Strict increase of g plus monotone approach of g(y+1)/g(y) to 1 beyond the
// family's scan start, out to `horizon`.
inline ConditionCheck check_queue_weight_growth(const UtilityPair& u,
                                                std::int64_t horizon = 10000,
                                                double tol = 1e-9) {
  ConditionCheck c;
  for (std::int64_t y = 0; y < std::min<std::int64_t>(horizon, 256); ++y) {
    if (!(u.g(y + 1) > u.g(y))) {
      c.ok = false;
      c.detail = "g not strictly increasing at y=" + std::to_string(y);
      return c;
    }
  }
  const std::int64_t y0 = u.ratio_scan_start();
  double prev_gap = std::numeric_limits<double>::infinity();
  for (std::int64_t y = y0; y <= horizon; ++y) {
    double gap = std::expm1(u.log_g(y + 1) - u.log_g(y));  // g(y+1)/g(y) - 1
    if (gap < -tol) {
      c.ok = false;
      c.detail = "g ratio dipped below 1 at y=" + std::to_string(y);
      return c;
    }
    if (gap > prev_gap + tol) {
      c.ok = false;
      c.detail = "g ratio approach to 1 not monotone at y=" + std::to_string(y);
      return c;
    }
    prev_gap = gap;
  }
  double final_gap = std::expm1(u.log_g(horizon + 1) - u.log_g(horizon));
  if (final_gap > 1e-2) {
    c.ok = false;
    c.detail = "g ratio still far from 1 at the horizon";
  }
  return c;
}

// Strict increase and concavity of h on a log-spaced grid in [lo, hi].
inline ConditionCheck check_rate_score_shape(const UtilityPair& u, double lo = 1e-3,
                                             double hi = 10.0, int points = 400,
                                             double tol = 1e-12) {
  ConditionCheck c;
  if (!(lo > 0 && hi > lo && points > 2)) throw std::invalid_argument("bad grid");
  std::vector<double> y(points), hv(points);
  double step = std::log(hi / lo) / (points - 1);
  for (int k = 0; k < points; ++k) {
    y[k] = lo * std::exp(step * k);
    hv[k] = u.h(y[k]);
  }
  for (int k = 0; k + 1 < points; ++k) {
    if (!(hv[k + 1] > hv[k])) {
      c.ok = false;
      c.detail = "h not strictly increasing near y=" + std::to_string(y[k]);
      return c;
    }
    if (!(u.h_prime(y[k]) > 0)) {
      c.ok = false;
      c.detail = "h' not positive near y=" + std::to_string(y[k]);
      return c;
    }
  }
  for (int k = 0; k + 2 < points; ++k) {
    double s1 = (hv[k + 1] - hv[k]) / (y[k + 1] - y[k]);
    double s2 = (hv[k + 2] - hv[k + 1]) / (y[k + 2] - y[k + 1]);
    if (s2 > s1 + tol * std::max(1.0, std::abs(s1))) {
      c.ok = false;
      c.detail = "h not concave near y=" + std::to_string(y[k + 1]);
      return c;
    }
  }
  return c;
}

// Target rate vector nu, margin eps, and the utility pair tying them to the
// drift analysis. Arrival means may sit exactly at nu_i - eps; the drift
// algebra only needs lambda_i - nu_i <= -eps.
struct LyapunovSpec {
  std::vector<double> nu;
  double epsilon = 0;
  UtilityPair utility = UtilityPair::quadratic_inverse();

  double weight(std::size_t i) const { return utility.h_prime(nu.at(i)); }

  void validate_against(const std::vector<ArrivalSpec>& arrivals) const {
    if (!(epsilon > 0)) throw std::invalid_argument("drift margin must be positive");
    if (nu.size() != arrivals.size())
      throw std::invalid_argument("target rate vector size mismatch");
    for (std::size_t i = 0; i < nu.size(); ++i) {
      if (!(nu[i] > 0)) throw std::invalid_argument("target rates must be positive");
      if (arrivals[i].mean() > nu[i] - epsilon + 1e-12)
        throw std::invalid_argument("arrival mean exceeds nu_i - eps at node " + std::to_string(i));
    }
  }
};

}  // namespace latqueue
