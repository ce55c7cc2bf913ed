#pragma once

// A validated scenario: topology, arrivals, rate family, scheduler, routing
// and run plan. Construction-time validation enforces the cross-field rules
// (scheduler/time-model pairing, multi-hop shape requirements, and the drift
// margin when a Lyapunov block is present).

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "latqueue/arrivals.hpp"
#include "latqueue/rates.hpp"
#include "latqueue/topology.hpp"
#include "latqueue/utility.hpp"

namespace latqueue {

enum class Scheduler { d1, d2, uniformized };
enum class TimeModel { discrete, continuous };
enum class RoutingDegree { lattice, power };  // 2d true neighbours vs 2^d convention

struct Routing {
  bool multi_hop = false;
  double q = 1.0;                                // exit probability per service
  RoutingDegree degree = RoutingDegree::lattice;
};

struct ScenarioConfig {
  Topology topology;
  std::vector<ArrivalSpec> arrivals;  // one per node
  RateFamily rates;
  Scheduler scheduler = Scheduler::d2;
  Routing routing;
  TimeModel time_model = TimeModel::discrete;
  double horizon = 0;          // slots (discrete) or time units (continuous)
  double burn_in_fraction = 0.2;
  int replications = 1;
  int batches = 20;
  std::uint64_t master_seed = 1;
  std::int64_t trace_stride = 0;  // 0: auto; <0: no trace
  std::optional<LyapunovSpec> lyapunov;

  std::size_t nodes() const { return topology.node_count(); }

  void validate() const {
    const std::size_t n = topology.node_count();
    if (arrivals.size() != n) throw std::invalid_argument("arrivals must cover every node");
    if (!(horizon > 0)) throw std::invalid_argument("horizon must be positive");
    if (!(burn_in_fraction >= 0 && burn_in_fraction < 1))
      throw std::invalid_argument("burn-in fraction must lie in [0,1)");
    if (replications < 1) throw std::invalid_argument("need at least one replication");
    if (batches < 2) throw std::invalid_argument("need at least two batches");

    const bool continuous = time_model == TimeModel::continuous;
    if (continuous && scheduler != Scheduler::uniformized)
      throw std::invalid_argument("continuous time runs use the uniformized scheduler");
    if (!continuous && scheduler == Scheduler::uniformized)
      throw std::invalid_argument("the uniformized scheduler needs continuous time");
    if (scheduler == Scheduler::d1 && rates.tag != RateFamily::Tag::sir)
      throw std::invalid_argument("the priority-race scheduler realises SIR rates only");

    for (const auto& a : arrivals) {
      if (continuous && a.kind() != ArrivalSpec::Kind::poisson_rate)
        throw std::invalid_argument("continuous time needs poisson arrival rates");
      if (!continuous && a.kind() == ArrivalSpec::Kind::poisson_rate)
        throw std::invalid_argument("slotted runs need slotted arrival batches");
    }

    if (routing.multi_hop) {
      if (!(routing.q > 0 && routing.q < 1))
        throw std::invalid_argument("multi-hop exit probability must lie in (0,1)");
      if (!topology.is_unit_lattice())
        throw std::invalid_argument("multi-hop routing needs a torus with the 0/1 kernel");
      for (const auto& a : arrivals)
        if (std::abs(a.mean() - arrivals.front().mean()) > 1e-12)
          throw std::invalid_argument("multi-hop runs need a symmetric arrival mean");
    }

    if (lyapunov) lyapunov->validate_against(arrivals);
  }

  // Multi-hop per-node throughput: exogenous mean is lambda * q.
  double multihop_lambda() const {
    if (!routing.multi_hop) throw std::logic_error("single-hop scenario has no relay load");
    return arrivals.front().mean() / routing.q;
  }
};

}  // namespace latqueue
