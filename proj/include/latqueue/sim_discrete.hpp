#pragma once

// Slotted simulator. Two schedulers realise the SIR conditional service law:
//   d1: exponential priority race, tau_i = -log(u_i)/x_i, node i transmits
//       iff x_i > 0 and a_{j-i} tau_i < tau_j for every interfering j
//       (exact float ties go to the lower node index);
//   d2: independent thinning, node i transmits iff x_i > 0 and u_i < psi_i(x).
// Both consume one uniform per node per slot so trajectories with shared
// streams stay aligned. Multi-hop routing moves each served job to a uniform
// lattice neighbour unless it exits (probability q).

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "latqueue/rng.hpp"
#include "latqueue/scenario.hpp"
#include "latqueue/stats.hpp"

namespace latqueue {

struct SlotOutcome {
  std::vector<std::uint8_t> services;
  std::vector<std::int64_t> arrivals;
  std::vector<std::int64_t> routed_in;
  std::vector<double> priorities;  // d1 only
};

namespace detail {
inline void require_open_unit(std::span<const double> u) {
  for (double v : u)
    if (!(v > 0 && v < 1)) throw std::invalid_argument("scheduler uniforms must lie in (0,1)");
}
}  // namespace detail

inline std::vector<double> d1_priorities(std::span<const std::int64_t> x,
                                         std::span<const double> uniforms) {
  detail::require_open_unit(uniforms);
  if (x.size() != uniforms.size()) throw std::invalid_argument("one uniform per node required");
  std::vector<double> tau(x.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    tau[i] = x[i] > 0 ? -std::log(uniforms[i]) / static_cast<double>(x[i])
                      : std::numeric_limits<double>::infinity();
  return tau;
}

inline std::vector<std::uint8_t> schedule_d1(std::span<const std::int64_t> x, const Topology& topo,
                                             std::span<const double> uniforms,
                                             std::vector<double>* priorities_out = nullptr) {
  validate_queue_state(x, topo.node_count());
  std::vector<double> tau = d1_priorities(x, uniforms);
  std::vector<std::uint8_t> eta(x.size(), 0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] <= 0) continue;
    bool wins = true;
    for (const Neighbor& nb : topo.neighbors(i)) {
      if (nb.index == i) continue;
      double scaled = nb.weight * tau[i];
      if (scaled < tau[nb.index]) continue;
      if (scaled == tau[nb.index] && i < nb.index) continue;
      wins = false;
      break;
    }
    eta[i] = wins ? 1 : 0;
  }
  if (priorities_out) *priorities_out = std::move(tau);
  return eta;
}

inline std::vector<std::uint8_t> schedule_d2(std::span<const std::int64_t> x,
                                             std::span<const double> psi,
                                             std::span<const double> uniforms) {
  detail::require_open_unit(uniforms);
  if (x.size() != psi.size() || x.size() != uniforms.size())
    throw std::invalid_argument("state, rates and uniforms must agree in size");
  std::vector<std::uint8_t> eta(x.size(), 0);
  for (std::size_t i = 0; i < x.size(); ++i)
    eta[i] = (x[i] > 0 && uniforms[i] < psi[i]) ? 1 : 0;
  return eta;
}

// Each served job exits with probability q, otherwise joins a lattice
// neighbour. Degree convention "lattice" spreads the stay mass over the 2d
// true neighbours; "power" gives each neighbour mass (1-q)/2^d and lets any
// leftover exit (only distinct for d >= 3). One uniform per served job.
inline std::vector<std::int64_t> route_multihop(std::span<const std::uint8_t> services,
                                                const Topology& topo, double q,
                                                RoutingDegree degree, Stream& routing) {
  if (!(q > 0 && q <= 1)) throw std::invalid_argument("exit probability must lie in (0,1]");
  if (services.size() != topo.node_count()) throw std::invalid_argument("service vector size mismatch");
  std::vector<std::int64_t> routed(topo.node_count(), 0);
  if (q == 1.0) {
    for (std::size_t i = 0; i < services.size(); ++i)
      if (services[i]) routing.uniform01();  // keep the stream advancing uniformly
    return routed;
  }
  const int d = topo.lattice_dimension();
  const double stay = 1.0 - q;
  for (std::size_t i = 0; i < services.size(); ++i) {
    if (!services[i]) continue;
    double u = routing.uniform01();
    if (u < q) continue;  // job exits
    double r = (u - q) / stay;  // uniform in [0,1) given the job stays
    auto nbs = topo.lattice_neighbors(i);
    std::size_t slots = degree == RoutingDegree::lattice
                            ? nbs.size()
                            : static_cast<std::size_t>(1) << d;
    auto k = static_cast<std::size_t>(r * static_cast<double>(slots));
    if (k >= nbs.size()) continue;  // leftover 2^d mass exits
    ++routed[nbs[k]];
  }
  return routed;
}

// One slot: services start, routed jobs and fresh arrivals join.
// Draw order is fixed (scheduling uniforms, then arrivals, then routing) but
// immaterial, as the three streams are independent.
inline SlotOutcome step(QueueState& x, const ScenarioConfig& cfg, ReplicationStreams& streams) {
  const std::size_t n = cfg.nodes();
  SlotOutcome out;
  std::vector<double> u(n);
  streams.scheduling.fill_uniform01(u);
  out.arrivals.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.arrivals[i] = cfg.arrivals[i].sample(streams.arrivals);

  if (cfg.scheduler == Scheduler::d1) {
    out.services = schedule_d1(x, cfg.topology, u, &out.priorities);
  } else {
    std::vector<double> psi = cfg.rates.eval(x, cfg.topology);
    out.services = schedule_d2(x, psi, u);
  }
  out.routed_in = cfg.routing.multi_hop
                      ? route_multihop(out.services, cfg.topology, cfg.routing.q,
                                       cfg.routing.degree, streams.routing)
                      : std::vector<std::int64_t>(n, 0);
  for (std::size_t i = 0; i < n; ++i)
    x[i] += out.arrivals[i] + out.routed_in[i] - static_cast<std::int64_t>(out.services[i]);
  return out;
}

// Deterministic slot with caller-supplied draws; single-hop only. Lets two
// trajectories share identical uniforms and arrival batches.
inline SlotOutcome step_with_inputs(QueueState& x, const ScenarioConfig& cfg,
                                    std::span<const double> sched_u,
                                    std::span<const std::int64_t> arrivals) {
  if (cfg.routing.multi_hop) throw std::invalid_argument("shared-input stepping is single-hop only");
  const std::size_t n = cfg.nodes();
  if (arrivals.size() != n) throw std::invalid_argument("arrival vector size mismatch");
  SlotOutcome out;
  out.arrivals.assign(arrivals.begin(), arrivals.end());
  if (cfg.scheduler == Scheduler::d1) {
    out.services = schedule_d1(x, cfg.topology, sched_u, &out.priorities);
  } else {
    std::vector<double> psi = cfg.rates.eval(x, cfg.topology);
    out.services = schedule_d2(x, psi, sched_u);
  }
  out.routed_in.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i)
    x[i] += out.arrivals[i] - static_cast<std::int64_t>(out.services[i]);
  return out;
}

using TraceSink = std::function<void(double /*slot or time*/, const QueueState&)>;

inline TrajectoryStats run_discrete(const ScenarioConfig& cfg, std::uint64_t replication,
                                    const TraceSink& trace = nullptr) {
  cfg.validate();
  if (cfg.time_model != TimeModel::discrete)
    throw std::invalid_argument("run_discrete needs a discrete-time scenario");
  const std::size_t n = cfg.nodes();
  const auto slots = static_cast<std::int64_t>(std::llround(cfg.horizon));
  const auto burn = static_cast<std::int64_t>(static_cast<double>(slots) * cfg.burn_in_fraction);
  const std::int64_t active = slots - burn;
  if (active < 1) throw std::invalid_argument("no slots remain after burn-in");
  const std::size_t nbatch = static_cast<std::size_t>(
      std::min<std::int64_t>(cfg.batches, active));
  const UtilityPair util = cfg.lyapunov ? cfg.lyapunov->utility : UtilityPair::quadratic_inverse();

  TrajectoryStats ts;
  ts.nodes = n;
  ts.span = static_cast<double>(active);
  ts.burn_in = static_cast<double>(burn);
  ts.mean_x.assign(n, 0);
  ts.mean_x2.assign(n, 0);
  ts.mean_g.assign(n, 0);
  ts.mean_delta.assign(n, 0);
  ts.service_rate.assign(n, 0);
  auto zero_batches = [&] { return std::vector<std::vector<double>>(nbatch, std::vector<double>(n, 0.0)); };
  ts.batch_x = zero_batches();
  ts.batch_x2 = zero_batches();
  ts.batch_g = zero_batches();
  ts.batch_delta = zero_batches();
  ts.batch_service = zero_batches();
  std::vector<std::int64_t> batch_len(nbatch, 0);

  ReplicationStreams streams = ReplicationStreams::make(cfg.master_seed, replication);
  QueueState x(n, 0);
  const std::int64_t w1 = slots / 2, w2 = (3 * slots) / 4;
  std::int64_t w1_count = 0, w2_count = 0;

  for (std::int64_t k = 0; k < slots; ++k) {
    if (trace && cfg.trace_stride > 0 && k % cfg.trace_stride == 0)
      trace(static_cast<double>(k), x);
    if (k >= w1) {
      double avg = 0;
      for (auto v : x) avg += static_cast<double>(v);
      avg /= static_cast<double>(n);
      if (k < w2) {
        ts.window_first += avg;
        ++w1_count;
      } else {
        ts.window_second += avg;
        ++w2_count;
      }
    }
    SlotOutcome slot_out;
    if (k >= burn) {
      const std::size_t b = std::min<std::size_t>(
          nbatch - 1, static_cast<std::size_t>((k - burn) * static_cast<std::int64_t>(nbatch) / active));
      ++batch_len[b];
      for (std::size_t i = 0; i < n; ++i) {
        const auto xi = static_cast<double>(x[i]);
        const double gi = util.g(x[i]);
        const double di = util.delta(x[i]);
        ts.mean_x[i] += xi;
        ts.mean_x2[i] += xi * xi;
        ts.mean_g[i] += gi;
        ts.mean_delta[i] += di;
        ts.batch_x[b][i] += xi;
        ts.batch_x2[b][i] += xi * xi;
        ts.batch_g[b][i] += gi;
        ts.batch_delta[b][i] += di;
      }
      slot_out = step(x, cfg, streams);
      for (std::size_t i = 0; i < n; ++i) {
        ts.service_rate[i] += slot_out.services[i];
        ts.batch_service[b][i] += slot_out.services[i];
      }
    } else {
      slot_out = step(x, cfg, streams);
    }
  }

  const double inv = 1.0 / static_cast<double>(active);
  for (std::size_t i = 0; i < n; ++i) {
    ts.mean_x[i] *= inv;
    ts.mean_x2[i] *= inv;
    ts.mean_g[i] *= inv;
    ts.mean_delta[i] *= inv;
    ts.service_rate[i] *= inv;
  }
  for (std::size_t b = 0; b < nbatch; ++b) {
    const double bl = static_cast<double>(std::max<std::int64_t>(batch_len[b], 1));
    for (std::size_t i = 0; i < n; ++i) {
      ts.batch_x[b][i] /= bl;
      ts.batch_x2[b][i] /= bl;
      ts.batch_g[b][i] /= bl;
      ts.batch_delta[b][i] /= bl;
      ts.batch_service[b][i] /= bl;
    }
  }
  if (w1_count > 0) ts.window_first /= static_cast<double>(w1_count);
  if (w2_count > 0) ts.window_second /= static_cast<double>(w2_count);
  return ts;
}

}  // namespace latqueue
