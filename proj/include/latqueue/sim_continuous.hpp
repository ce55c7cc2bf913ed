#pragma once

// Continuous time via uniformization. With Poisson arrival rates lambda_i and
// state-dependent departure intensities psi_i(x) <= psi_max, the chain is
// driven at constant rate Lambda = sum_i lambda_i + n * psi_max; each event
// is an arrival, a departure, or a self-loop with the leftover mass. Time
// averages are integrated exactly between events.

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "latqueue/rng.hpp"
#include "latqueue/scenario.hpp"
#include "latqueue/sim_discrete.hpp"
#include "latqueue/stats.hpp"

namespace latqueue {

struct EventRecord {
  enum class Kind { arrival, departure, self_loop };
  double time = 0;
  Kind kind = Kind::self_loop;
  std::size_t node = 0;
  std::int64_t destination = -1;  // departures: receiving node, -1 = left the network
};

inline double uniformization_rate(const ScenarioConfig& cfg) {
  double lam = 0;
  for (const auto& a : cfg.arrivals) lam += a.rate();
  double big = lam + static_cast<double>(cfg.nodes()) * cfg.rates.psi_max();
  if (!(big > 0)) throw std::invalid_argument("uniformization rate must be positive");
  return big;
}

// Advances the chain by one uniformized event. The scheduling stream drives
// the holding time and event selection; the routing stream is consumed only
// by multi-hop departures.
inline EventRecord uniformized_step(QueueState& x, const ScenarioConfig& cfg,
                                    ReplicationStreams& streams, double now) {
  const std::size_t n = cfg.nodes();
  const double big = uniformization_rate(cfg);
  EventRecord ev;
  ev.time = now + streams.scheduling.exponential(big);

  std::vector<double> psi = cfg.rates.eval(x, cfg.topology);
  double u = streams.scheduling.uniform01() * big;
  double acc = 0;
  for (std::size_t i = 0; i < n; ++i) {
    acc += cfg.arrivals[i].rate();
    if (u < acc) {
      ++x[i];
      ev.kind = EventRecord::Kind::arrival;
      ev.node = i;
      return ev;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    acc += psi[i];
    if (u < acc) {
      --x[i];  // psi_i > 0 implies x_i > 0
      ev.kind = EventRecord::Kind::departure;
      ev.node = i;
      if (cfg.routing.multi_hop) {
        double r = streams.routing.uniform01();
        if (r >= cfg.routing.q) {
          double s = (r - cfg.routing.q) / (1.0 - cfg.routing.q);
          auto nbs = cfg.topology.lattice_neighbors(i);
          std::size_t slots = cfg.routing.degree == RoutingDegree::lattice
                                  ? nbs.size()
                                  : static_cast<std::size_t>(1)
                                        << cfg.topology.lattice_dimension();
          auto k = static_cast<std::size_t>(s * static_cast<double>(slots));
          if (k < nbs.size()) {
            ++x[nbs[k]];
            ev.destination = static_cast<std::int64_t>(nbs[k]);
          }
        }
      }
      return ev;
    }
  }
  ev.kind = EventRecord::Kind::self_loop;
  return ev;
}

inline TrajectoryStats run_continuous(const ScenarioConfig& cfg, std::uint64_t replication,
                                      const TraceSink& trace = nullptr) {
  cfg.validate();
  if (cfg.time_model != TimeModel::continuous)
    throw std::invalid_argument("run_continuous needs a continuous-time scenario");
  const std::size_t n = cfg.nodes();
  const double total = cfg.horizon;
  const double burn = total * cfg.burn_in_fraction;
  const double active = total - burn;
  if (!(active > 0)) throw std::invalid_argument("no time remains after burn-in");
  const auto nbatch = static_cast<std::size_t>(cfg.batches);
  const double blen = active / static_cast<double>(nbatch);
  const UtilityPair util = cfg.lyapunov ? cfg.lyapunov->utility : UtilityPair::quadratic_inverse();

  TrajectoryStats ts;
  ts.nodes = n;
  ts.span = active;
  ts.burn_in = burn;
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

  ReplicationStreams streams = ReplicationStreams::make(cfg.master_seed, replication);
  QueueState x(n, 0);
  double now = 0;
  double events = 0, self_loops = 0;
  const double w1 = total / 2, w2 = 3 * total / 4;
  std::int64_t traced = 0;

  // Adds the segment [t0, t1) spent in state `st` to every accumulator it
  // overlaps (windows, totals, batches).
  const auto absorb = [&](double t0, double t1, const QueueState& st) {
    if (t1 <= t0) return;
    double avg = 0;
    for (auto v : st) avg += static_cast<double>(v);
    avg /= static_cast<double>(n);
    double a = std::max(t0, w1), b = std::min(t1, w2);
    if (b > a) ts.window_first += (b - a) * avg;
    a = std::max(t0, w2);
    b = std::min(t1, total);
    if (b > a) ts.window_second += (b - a) * avg;
    a = std::max(t0, burn);
    b = std::min(t1, total);
    if (b <= a) return;
    for (std::size_t i = 0; i < n; ++i) {
      const auto xi = static_cast<double>(st[i]);
      const double gi = util.g(st[i]);
      const double di = util.delta(st[i]);
      ts.mean_x[i] += (b - a) * xi;
      ts.mean_x2[i] += (b - a) * xi * xi;
      ts.mean_g[i] += (b - a) * gi;
      ts.mean_delta[i] += (b - a) * di;
      double seg0 = a;
      while (seg0 < b) {
        auto bi = std::min<std::size_t>(nbatch - 1,
                                        static_cast<std::size_t>((seg0 - burn) / blen));
        double edge = std::min(b, burn + blen * static_cast<double>(bi + 1));
        if (edge <= seg0) edge = b;  // final batch absorbs rounding
        const double w = edge - seg0;
        ts.batch_x[bi][i] += w * xi;
        ts.batch_x2[bi][i] += w * xi * xi;
        ts.batch_g[bi][i] += w * gi;
        ts.batch_delta[bi][i] += w * di;
        seg0 = edge;
      }
    }
  };

  QueueState before(n, 0);
  while (now < total) {
    if (trace && cfg.trace_stride > 0 && traced % cfg.trace_stride == 0) trace(now, x);
    ++traced;
    before = x;
    EventRecord ev = uniformized_step(x, cfg, streams, now);
    absorb(now, std::min(ev.time, total), before);
    now = ev.time;
    if (now >= total) break;
    events += 1;
    if (ev.kind == EventRecord::Kind::self_loop) self_loops += 1;
    if (ev.kind == EventRecord::Kind::departure && ev.time >= burn) {
      auto bi = std::min<std::size_t>(nbatch - 1,
                                      static_cast<std::size_t>((ev.time - burn) / blen));
      ts.service_rate[ev.node] += 1;
      ts.batch_service[bi][ev.node] += 1;
    }
  }

  for (std::size_t i = 0; i < n; ++i) {
    ts.mean_x[i] /= active;
    ts.mean_x2[i] /= active;
    ts.mean_g[i] /= active;
    ts.mean_delta[i] /= active;
    ts.service_rate[i] /= active;
  }
  for (std::size_t b = 0; b < nbatch; ++b)
    for (std::size_t i = 0; i < n; ++i) {
      ts.batch_x[b][i] /= blen;
      ts.batch_x2[b][i] /= blen;
      ts.batch_g[b][i] /= blen;
      ts.batch_delta[b][i] /= blen;
      ts.batch_service[b][i] /= blen;
    }
  ts.window_first /= (w2 - w1);
  ts.window_second /= (total - w2);
  ts.events = events;
  ts.self_loop_fraction = events > 0 ? self_loops / events : 0;
  return ts;
}

}  // namespace latqueue
