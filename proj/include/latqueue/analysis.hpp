#pragma once

// Drift functionals and steady-state moment bounds. For the Lyapunov
// function F(x) = sum_i h'(nu_i) G(x_i) with G the running sum of g, the
// one-slot conditional drift under bernoulli(lambda_i) arrivals is exactly
//   sum_i h'(nu_i) [ lambda_i (1 - psi_i) g(x_i + 1) - (1 - lambda_i) psi_i g(x_i) ],
// bounded above (given the fairness property of the rates and
// lambda_i - nu_i <= -eps) by sum_i h'(nu_i) [ -eps g(x_i) + Delta(x_i) ].

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "latqueue/scenario.hpp"
#include "latqueue/stats.hpp"

namespace latqueue {

inline double drift_exact(std::span<const std::int64_t> x, std::span<const double> lambda,
                          std::span<const double> psi, const LyapunovSpec& spec) {
  if (x.size() != lambda.size() || x.size() != psi.size() || x.size() != spec.nu.size())
    throw std::invalid_argument("drift inputs must agree in size");
  double acc = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double w = spec.weight(i);
    acc += w * (lambda[i] * (1.0 - psi[i]) * spec.utility.g(x[i] + 1) -
                (1.0 - lambda[i]) * psi[i] * spec.utility.g(x[i]));
  }
  return acc;
}

// Scenario-level wrapper; the exact drift formula needs bernoulli batches.
inline double drift_exact(const ScenarioConfig& cfg, std::span<const std::int64_t> x) {
  if (!cfg.lyapunov) throw std::invalid_argument("drift evaluation needs a lyapunov block");
  std::vector<double> lambda(cfg.nodes());
  for (std::size_t i = 0; i < cfg.nodes(); ++i) {
    if (cfg.arrivals[i].kind() != ArrivalSpec::Kind::bernoulli)
      throw std::invalid_argument("exact drift requires bernoulli arrivals");
    lambda[i] = cfg.arrivals[i].mean();
  }
  std::vector<double> psi = cfg.rates.eval(x, cfg.topology);
  return drift_exact(x, lambda, psi, *cfg.lyapunov);
}

inline double drift_bound(std::span<const std::int64_t> x, const LyapunovSpec& spec) {
  if (x.size() != spec.nu.size()) throw std::invalid_argument("drift inputs must agree in size");
  double acc = 0;
  for (std::size_t i = 0; i < x.size(); ++i)
    acc += spec.weight(i) * (-spec.epsilon * spec.utility.g(x[i]) + spec.utility.delta(x[i]));
  return acc;
}

// Intermediate link of the bound chain: sum_i h'(nu_i)(lambda_i g(x_i+1) - psi_i g(x_i)).
inline double drift_intermediate(std::span<const std::int64_t> x, std::span<const double> lambda,
                                 std::span<const double> psi, const LyapunovSpec& spec) {
  double acc = 0;
  for (std::size_t i = 0; i < x.size(); ++i)
    acc += spec.weight(i) *
           (lambda[i] * spec.utility.g(x[i] + 1) - psi[i] * spec.utility.g(x[i]));
  return acc;
}

// Fairness slack term sum_i h'(nu_i)(nu_i - psi_i) g(x_i); nonpositive in
// aggregate whenever nu is witness-induced.
inline double drift_correction(std::span<const std::int64_t> x, std::span<const double> psi,
                               const LyapunovSpec& spec) {
  double acc = 0;
  for (std::size_t i = 0; i < x.size(); ++i)
    acc += spec.weight(i) * (spec.nu[i] - psi[i]) * spec.utility.g(x[i]);
  return acc;
}

// Scans every state with coordinates in [0, max_coord] and returns the least
// threshold m such that drift_exact < 0 whenever max_i x_i >= m (within the
// scanned box). Empty optional: even the outermost shell has nonnegative
// drift, so no threshold can be certified.
inline std::optional<std::int64_t> drift_negativity_threshold(const ScenarioConfig& cfg,
                                                              std::int64_t max_coord) {
  if (!cfg.lyapunov) throw std::invalid_argument("drift evaluation needs a lyapunov block");
  const std::size_t n = cfg.nodes();
  double total = std::pow(static_cast<double>(max_coord) + 1, static_cast<double>(n));
  if (total > 5e7) throw std::invalid_argument("state box too large to scan");
  std::vector<double> lambda(n);
  for (std::size_t i = 0; i < n; ++i) lambda[i] = cfg.arrivals[i].mean();
  std::vector<std::int64_t> x(n, 0);
  std::int64_t worst = -1;  // largest max-coordinate with nonnegative drift
  while (true) {
    std::vector<double> psi = cfg.rates.eval(x, cfg.topology);
    if (drift_exact(x, lambda, psi, *cfg.lyapunov) >= 0) {
      std::int64_t mx = 0;
      for (auto v : x) mx = std::max(mx, v);
      worst = std::max(worst, mx);
    }
    std::size_t k = 0;
    while (k < n && x[k] == max_coord) x[k++] = 0;
    if (k == n) break;
    ++x[k];
  }
  if (worst >= max_coord) return std::nullopt;
  return worst + 1;
}

struct BoundReport {
  enum class Verdict { holds, violated, inconclusive };
  std::string name;
  double lhs = 0, lhs_ci = 0;
  double rhs = 0, rhs_ci = 0;
  Verdict verdict = Verdict::inconclusive;
  std::string note;

  static const char* verdict_name(Verdict v) {
    switch (v) {
      case Verdict::holds: return "holds";
      case Verdict::violated: return "violated";
      case Verdict::inconclusive: return "inconclusive";
    }
    return "?";
  }
};

inline MomentEstimate exact_estimate(double value) {
  MomentEstimate e;
  e.point = value;
  e.half_width = 0;
  e.batches = 0;
  e.conclusive = true;
  return e;
}

namespace detail {
inline BoundReport finish_report(std::string name, double lhs, double lhs_ci, double rhs,
                                 double rhs_ci, bool conclusive, std::string note = {}) {
  BoundReport r;
  r.name = std::move(name);
  r.lhs = lhs;
  r.lhs_ci = lhs_ci;
  r.rhs = rhs;
  r.rhs_ci = rhs_ci;
  r.note = std::move(note);
  const double tol = 1e-9 * std::max({1.0, std::abs(lhs), std::abs(rhs)});
  if (lhs - lhs_ci > rhs + rhs_ci + tol)
    r.verdict = BoundReport::Verdict::violated;
  else if (conclusive)
    r.verdict = BoundReport::Verdict::holds;
  else
    r.verdict = BoundReport::Verdict::inconclusive;
  return r;
}
}  // namespace detail

// Weighted first-moment bound: sum_i h'(nu_i) E g(X_i) <= (1/eps) sum_i h'(nu_i) E Delta(X_i).
inline BoundReport bound_first_moment(std::span<const MomentEstimate> e_g,
                                      std::span<const MomentEstimate> e_delta,
                                      const LyapunovSpec& spec) {
  if (e_g.size() != spec.nu.size() || e_delta.size() != spec.nu.size())
    throw std::invalid_argument("estimate vectors must cover every node");
  double lhs = 0, lhs_ci = 0, rhs = 0, rhs_ci = 0;
  bool conclusive = true;
  for (std::size_t i = 0; i < e_g.size(); ++i) {
    const double w = spec.weight(i);
    lhs += w * e_g[i].point;
    lhs_ci += w * e_g[i].half_width;
    rhs += w * e_delta[i].point / spec.epsilon;
    rhs_ci += w * e_delta[i].half_width / spec.epsilon;
    conclusive = conclusive && e_g[i].conclusive && e_delta[i].conclusive;
  }
  return detail::finish_report("first-moment", lhs, lhs_ci, rhs, rhs_ci, conclusive);
}

struct SecondMomentCoefficients {
  std::vector<double> a_i, b_i;  // per node
};

// A_i = 3 E xi_i^2 + 3 lambda_i (1 - 2 lambda_i)
// B_i = E xi_i^3 - lambda_i + 3 lambda_i^2
//       - 3 (1 - 2 lambda_i)(lambda_i^2 - lambda_i/2 + E xi_i^2 / 2)
inline SecondMomentCoefficients second_moment_coefficients(const std::vector<ArrivalSpec>& arrivals) {
  SecondMomentCoefficients c;
  for (const auto& a : arrivals) {
    const double l = a.moment(1), m2 = a.moment(2), m3 = a.moment(3);
    c.a_i.push_back(3 * m2 + 3 * l * (1 - 2 * l));
    c.b_i.push_back(m3 - l + 3 * l * l - 3 * (1 - 2 * l) * (l * l - l / 2 + m2 / 2));
  }
  return c;
}

// Second-moment bounds for g = y^2, h = -1/y. Returns the aggregate-constant
// form eps sum E X_i^2 / nu_i^2 <= A sum E X_i / nu_i^2 + B (A, B summed over
// nodes) and the tighter per-node form
// 3 eps sum E X_i^2 / nu_i^2 <= sum A_i E X_i / nu_i^2 + sum B_i / nu_i^2.
inline std::vector<BoundReport> bound_second_moment(const std::vector<ArrivalSpec>& arrivals,
                                                    const LyapunovSpec& spec,
                                                    std::span<const MomentEstimate> e_x,
                                                    std::span<const MomentEstimate> e_x2) {
  if (spec.utility.family() != UtilityPair::Family::quadratic_inverse)
    throw std::invalid_argument("second-moment bound is stated for g=y^2, h=-1/y");
  const std::size_t n = arrivals.size();
  if (e_x.size() != n || e_x2.size() != n || spec.nu.size() != n)
    throw std::invalid_argument("estimate vectors must cover every node");
  const auto coeff = second_moment_coefficients(arrivals);
  double big_a = 0, big_b = 0;
  for (std::size_t i = 0; i < n; ++i) {
    big_a += coeff.a_i[i] / (spec.nu[i] * spec.nu[i]);
    big_b += coeff.b_i[i] / (spec.nu[i] * spec.nu[i]);
  }
  double sx = 0, sx_ci = 0, sx2 = 0, sx2_ci = 0;
  bool conclusive = true;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = 1.0 / (spec.nu[i] * spec.nu[i]);
    sx += w * e_x[i].point;
    sx_ci += w * e_x[i].half_width;
    sx2 += w * e_x2[i].point;
    sx2_ci += w * e_x2[i].half_width;
    conclusive = conclusive && e_x[i].conclusive && e_x2[i].conclusive;
  }
  std::vector<BoundReport> out;
  out.push_back(detail::finish_report("second-moment", spec.epsilon * sx2,
                                      spec.epsilon * sx2_ci, big_a * sx + big_b,
                                      big_a * sx_ci, conclusive));
  double rhs = 0, rhs_ci = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = 1.0 / (spec.nu[i] * spec.nu[i]);
    rhs += w * (coeff.a_i[i] * e_x[i].point + coeff.b_i[i]);
    rhs_ci += w * coeff.a_i[i] * e_x[i].half_width;
  }
  out.push_back(detail::finish_report("second-moment-pernode", 3 * spec.epsilon * sx2,
                                      3 * spec.epsilon * sx2_ci, rhs, rhs_ci, conclusive));
  return out;
}

// Multi-hop mean bound, slotted time: for lambda < 1/(2^d + 1),
//   E X <= (E xi^2 + 2^d (1-q) lambda + lambda - 2 lambda^2 q^2) / (2 q (1/(2^d+1) - lambda)).
inline BoundReport bound_multihop_discrete(double exi2, double lambda, double q, int d,
                                           RoutingDegree degree, const MomentEstimate& e_x) {
  const double pd = std::pow(2.0, d);
  if (!(lambda < 1.0 / (pd + 1.0)))
    throw std::invalid_argument("relay load must be below the lattice threshold");
  if (!(q > 0 && q < 1)) throw std::invalid_argument("exit probability must lie in (0,1)");
  const double rhs =
      (exi2 + pd * (1 - q) * lambda + lambda - 2 * lambda * lambda * q * q) /
      (2 * q * (1.0 / (pd + 1.0) - lambda));
  std::string note;
  if (degree == RoutingDegree::lattice && static_cast<double>(2 * d) != pd)
    note = "bound derived for the 2^d-neighbour convention";
  return detail::finish_report("multihop-mean", e_x.point, e_x.half_width, rhs, 0,
                               e_x.conclusive, std::move(note));
}

// Multi-hop mean bound, continuous time: E X <= lambda / (q (1/(2^d+1) - lambda)).
inline BoundReport bound_multihop_continuous(double lambda, double q, int d,
                                             const MomentEstimate& e_x) {
  const double pd = std::pow(2.0, d);
  if (!(lambda < 1.0 / (pd + 1.0)))
    throw std::invalid_argument("relay load must be below the lattice threshold");
  if (!(q > 0 && q < 1)) throw std::invalid_argument("exit probability must lie in (0,1)");
  const double rhs = lambda / (q * (1.0 / (pd + 1.0) - lambda));
  return detail::finish_report("multihop-mean-ct", e_x.point, e_x.half_width, rhs, 0,
                               e_x.conclusive);
}

enum class StabilityVerdict { stabilizing, growing, inconclusive };

inline const char* verdict_name(StabilityVerdict v) {
  switch (v) {
    case StabilityVerdict::stabilizing: return "stabilizing";
    case StabilityVerdict::growing: return "growing";
    case StabilityVerdict::inconclusive: return "inconclusive";
  }
  return "?";
}

// Two-window heuristic on the node-averaged queue: windows [T/2, 3T/4) and
// [3T/4, T). Flat within 10% relative change reads as stabilizing; second
// window at >= 1.25x the first reads as growing. The growth factor must sit
// below 1.4: ballistic growth from an empty start puts the window means at
// effective times 5T/8 and 7T/8, capping their ratio at 7/5. Labels are
// heuristic.
inline StabilityVerdict window_verdict(double first, double second) {
  if (first == 0 && second == 0) return StabilityVerdict::stabilizing;
  if (first > 0 && std::abs(second - first) / first < 0.10) return StabilityVerdict::stabilizing;
  if (second >= 1.25 * first && second > 0) return StabilityVerdict::growing;
  return StabilityVerdict::inconclusive;
}

struct SweepRow {
  double lambda = 0;
  StabilityVerdict verdict = StabilityVerdict::inconclusive;
  double window_first = 0, window_second = 0;  // averaged over replications
};

// Replaces every node's arrival mean by each grid value and re-runs the
// scenario. The lyapunov block is dropped: sweeps deliberately cross the
// margin. Per-lambda verdict requires every replication to agree.
inline SweepRow sweep_point(ScenarioConfig cfg, double lambda,
                            const std::function<TrajectoryStats(const ScenarioConfig&, std::uint64_t)>& runner) {
  cfg.lyapunov.reset();
  for (auto& a : cfg.arrivals)
    a = cfg.time_model == TimeModel::continuous ? ArrivalSpec::poisson_rate(lambda)
                                                : ArrivalSpec::bernoulli(lambda);
  cfg.validate();
  SweepRow row;
  row.lambda = lambda;
  bool all_stab = true, all_grow = true;
  for (int r = 0; r < cfg.replications; ++r) {
    TrajectoryStats ts = runner(cfg, static_cast<std::uint64_t>(r));
    row.window_first += ts.window_first;
    row.window_second += ts.window_second;
    StabilityVerdict v = window_verdict(ts.window_first, ts.window_second);
    all_stab = all_stab && v == StabilityVerdict::stabilizing;
    all_grow = all_grow && v == StabilityVerdict::growing;
  }
  row.window_first /= cfg.replications;
  row.window_second /= cfg.replications;
  row.verdict = all_stab   ? StabilityVerdict::stabilizing
                : all_grow ? StabilityVerdict::growing
                           : StabilityVerdict::inconclusive;
  return row;
}

struct TrendReport {
  double slope = 0;
  double slope_se = 0;
  bool nonincreasing_95 = false;  // slope not significantly positive, one-sided
};

// Weighted least squares trend of estimates against a covariate (weights from
// the CI standard errors). Tests H0: slope <= 0 at one-sided 95%.
inline TrendReport wls_trend(std::span<const double> xs, std::span<const MomentEstimate> ys) {
  if (xs.size() != ys.size() || xs.size() < 3) throw std::invalid_argument("need >= 3 points");
  std::vector<double> w(xs.size());
  for (std::size_t i = 0; i < ys.size(); ++i) {
    double se = ys[i].half_width;
    if (ys[i].batches > 1) se = ys[i].half_width / student_t_975(ys[i].batches - 1);
    if (!(se > 0)) throw std::invalid_argument("trend test needs positive standard errors");
    w[i] = 1.0 / (se * se);
  }
  double sw = 0, swx = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sw += w[i];
    swx += w[i] * xs[i];
  }
  const double xbar = swx / sw;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += w[i] * (xs[i] - xbar) * (xs[i] - xbar);
    sxy += w[i] * (xs[i] - xbar) * ys[i].point;
  }
  TrendReport t;
  t.slope = sxy / sxx;
  t.slope_se = std::sqrt(1.0 / sxx);
  t.nonincreasing_95 = t.slope <= 1.6448536269514722 * t.slope_se;
  return t;
}

}  // namespace latqueue
