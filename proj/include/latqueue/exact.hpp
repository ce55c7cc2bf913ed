#pragma once

// Stationary distribution of the truncated chain by direct linear solve.
// Queues are capped at `cap`; arrivals that would push past the cap are
// discarded, which biases moments low by an amount controlled by the mass on
// the boundary (auto-cap doubles the cap until that mass is negligible).
// Discrete time needs the thinning scheduler (product-form transition
// kernel); continuous time solves the uniformized chain, whose stationary
// law coincides with the CTMC's because the clock is state-independent.

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "latqueue/scenario.hpp"
#include "latqueue/sim_continuous.hpp"

namespace latqueue {

struct StationaryResult {
  std::int64_t cap = 0;
  std::size_t states = 0;
  std::vector<double> pi;  // mixed-radix index, node 0 most significant
  std::vector<double> mean_x, mean_x2, mean_g, mean_delta, mean_psi, leak;  // per node
  double residual = 0;       // || pi P - pi ||_inf of the solved chain
  double boundary_mass = 0;  // stationary mass with any queue at the cap

  std::size_t index_of(std::span<const std::int64_t> x) const {
    std::size_t idx = 0;
    for (auto v : x) idx = idx * static_cast<std::size_t>(cap + 1) + static_cast<std::size_t>(v);
    return idx;
  }
};

namespace detail {

// Distribution of node i's next length given the current state: service
// bernoulli(psi_i) net of one arrival batch, clamped at the cap.
inline std::vector<std::pair<std::int64_t, double>> node_transition(
    std::int64_t xi, double psi, const std::vector<double>& pmf, std::int64_t cap) {
  std::vector<std::pair<std::int64_t, double>> out;
  const auto add = [&](std::int64_t v, double p) {
    if (p <= 0) return;
    v = std::min(v, cap);
    for (auto& [val, acc] : out)
      if (val == v) {
        acc += p;
        return;
      }
    out.emplace_back(v, p);
  };
  for (int s = 0; s <= 1; ++s) {
    const double ps = s ? psi : 1.0 - psi;
    if (ps <= 0) continue;
    for (std::size_t a = 0; a < pmf.size(); ++a)
      add(xi - s + static_cast<std::int64_t>(a), ps * pmf[a]);
  }
  return out;
}

inline std::vector<double> solve_stationary(std::size_t n_states,
                                            const std::vector<Eigen::Triplet<double>>& p_entries) {
  // pi P = pi with sum pi = 1: rows of (P^T - I), first row replaced by ones.
  std::vector<Eigen::Triplet<double>> sys;
  sys.reserve(p_entries.size() + 2 * n_states);
  for (const auto& t : p_entries)
    if (t.col() != 0) sys.emplace_back(t.col(), t.row(), t.value());  // transpose, skip row 0
  for (std::size_t s = 1; s < n_states; ++s)
    sys.emplace_back(static_cast<int>(s), static_cast<int>(s), -1.0);
  for (std::size_t s = 0; s < n_states; ++s) sys.emplace_back(0, static_cast<int>(s), 1.0);
  Eigen::SparseMatrix<double> m(static_cast<Eigen::Index>(n_states),
                                static_cast<Eigen::Index>(n_states));
  m.setFromTriplets(sys.begin(), sys.end());
  m.makeCompressed();
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.analyzePattern(m);
  lu.factorize(m);
  if (lu.info() != Eigen::Success)
    throw std::runtime_error("stationary solve failed: singular transition system");
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_states));
  rhs(0) = 1.0;
  Eigen::VectorXd pi = lu.solve(rhs);
  std::vector<double> out(n_states);
  double total = 0;
  for (std::size_t s = 0; s < n_states; ++s) {
    double v = pi(static_cast<Eigen::Index>(s));
    if (v < -1e-9) throw std::runtime_error("stationary solve produced a negative mass");
    out[s] = std::max(v, 0.0);
    total += out[s];
  }
  for (double& v : out) v /= total;
  return out;
}

}  // namespace detail

inline StationaryResult exact_stationary(const ScenarioConfig& cfg, std::int64_t cap) {
  cfg.validate();
  if (cap < 1) throw std::invalid_argument("cap must be >= 1");
  if (cfg.routing.multi_hop)
    throw std::invalid_argument("exact solve covers single-hop scenarios");
  const bool continuous = cfg.time_model == TimeModel::continuous;
  if (!continuous && cfg.scheduler != Scheduler::d2)
    throw std::invalid_argument("exact slotted solve needs the thinning scheduler");
  const std::size_t n = cfg.nodes();
  double states_d = std::pow(static_cast<double>(cap) + 1, static_cast<double>(n));
  if (states_d > 2e6) throw std::invalid_argument("truncated state space too large");
  const auto n_states = static_cast<std::size_t>(states_d);

  std::vector<std::size_t> stride(n, 1);
  for (std::size_t i = n; i-- > 1;) stride[i - 1] = stride[i] * static_cast<std::size_t>(cap + 1);

  std::vector<Eigen::Triplet<double>> entries;
  std::vector<std::int64_t> x(n, 0);
  const double big = continuous ? uniformization_rate(cfg) : 0;

  for (std::size_t s = 0; s < n_states; ++s) {
    std::size_t rem = s;
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = static_cast<std::int64_t>(rem / stride[i]);
      rem %= stride[i];
    }
    std::vector<double> psi = cfg.rates.eval(x, cfg.topology);
    if (continuous) {
      double out_rate = 0;
      for (std::size_t i = 0; i < n; ++i) {
        const double lam = cfg.arrivals[i].rate();
        if (lam > 0 && x[i] < cap) {
          entries.emplace_back(static_cast<int>(s), static_cast<int>(s + stride[i]), lam / big);
          out_rate += lam;
        }
        if (psi[i] > 0) {
          entries.emplace_back(static_cast<int>(s), static_cast<int>(s - stride[i]), psi[i] / big);
          out_rate += psi[i];
        }
      }
      entries.emplace_back(static_cast<int>(s), static_cast<int>(s), 1.0 - out_rate / big);
    } else {
      // Product over nodes of the per-node next-length laws.
      std::vector<std::vector<std::pair<std::int64_t, double>>> opts(n);
      for (std::size_t i = 0; i < n; ++i)
        opts[i] = detail::node_transition(x[i], psi[i], cfg.arrivals[i].pmf(), cap);
      std::vector<std::size_t> pick(n, 0);
      while (true) {
        double p = 1;
        std::size_t target = 0;
        for (std::size_t i = 0; i < n; ++i) {
          p *= opts[i][pick[i]].second;
          target += static_cast<std::size_t>(opts[i][pick[i]].first) * stride[i];
        }
        if (p > 0) entries.emplace_back(static_cast<int>(s), static_cast<int>(target), p);
        std::size_t k = 0;
        while (k < n && pick[k] + 1 == opts[k].size()) pick[k++] = 0;
        if (k == n) break;
        ++pick[k];
      }
    }
  }

  StationaryResult res;
  res.cap = cap;
  res.states = n_states;
  res.pi = detail::solve_stationary(n_states, entries);

  // Residual of the chain actually solved.
  std::vector<double> pip(n_states, 0.0);
  for (const auto& t : entries) pip[static_cast<std::size_t>(t.col())] += res.pi[static_cast<std::size_t>(t.row())] * t.value();
  for (std::size_t s = 0; s < n_states; ++s)
    res.residual = std::max(res.residual, std::abs(pip[s] - res.pi[s]));

  const UtilityPair util = cfg.lyapunov ? cfg.lyapunov->utility : UtilityPair::quadratic_inverse();
  res.mean_x.assign(n, 0);
  res.mean_x2.assign(n, 0);
  res.mean_g.assign(n, 0);
  res.mean_delta.assign(n, 0);
  res.mean_psi.assign(n, 0);
  res.leak.assign(n, 0);
  for (std::size_t s = 0; s < n_states; ++s) {
    const double p = res.pi[s];
    std::size_t rem = s;
    bool at_cap = false;
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = static_cast<std::int64_t>(rem / stride[i]);
      rem %= stride[i];
      at_cap = at_cap || x[i] == cap;
    }
    if (at_cap) res.boundary_mass += p;
    std::vector<double> psi = cfg.rates.eval(x, cfg.topology);
    for (std::size_t i = 0; i < n; ++i) {
      const auto xi = static_cast<double>(x[i]);
      res.mean_x[i] += p * xi;
      res.mean_x2[i] += p * xi * xi;
      res.mean_g[i] += p * util.g(x[i]);
      res.mean_delta[i] += p * util.delta(x[i]);
      res.mean_psi[i] += p * psi[i];
      if (continuous) {
        if (x[i] == cap) res.leak[i] += p * cfg.arrivals[i].rate();
      } else {
        // Expected number of arrivals clipped at the cap this slot.
        const auto& pmf = cfg.arrivals[i].pmf();
        for (int sv = 0; sv <= 1; ++sv) {
          const double ps = sv ? psi[i] : 1.0 - psi[i];
          if (ps <= 0) continue;
          for (std::size_t a = 0; a < pmf.size(); ++a) {
            const std::int64_t next = x[i] - sv + static_cast<std::int64_t>(a);
            if (next > cap) res.leak[i] += p * ps * pmf[a] * static_cast<double>(next - cap);
          }
        }
      }
    }
  }
  return res;
}

// Doubles the cap until the boundary mass drops below `tail_tol`.
inline StationaryResult exact_stationary_auto(const ScenarioConfig& cfg, std::int64_t initial_cap = 15,
                                              double tail_tol = 1e-8) {
  std::int64_t cap = std::max<std::int64_t>(initial_cap, 1);
  while (true) {
    StationaryResult res = exact_stationary(cfg, cap);
    if (res.boundary_mass < tail_tol) return res;
    cap *= 2;
  }
}

}  // namespace latqueue
