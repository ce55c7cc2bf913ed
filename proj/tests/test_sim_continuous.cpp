#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <numeric>

#include "latqueue/exact.hpp"
#include "latqueue/sim_continuous.hpp"
#include "latqueue/stats.hpp"

using namespace latqueue;
using Catch::Approx;

namespace {

ScenarioConfig mm1(double rate) {
  ScenarioConfig cfg;
  cfg.topology = Topology::line_segment(1, InterferenceKernel::nearest_neighbor(1));
  cfg.arrivals = {ArrivalSpec::poisson_rate(rate)};
  cfg.time_model = TimeModel::continuous;
  cfg.scheduler = Scheduler::uniformized;
  cfg.horizon = 50000;
  cfg.master_seed = 31;
  return cfg;
}

ScenarioConfig poisson_ring(std::int64_t n, double rate) {
  ScenarioConfig cfg;
  cfg.topology = Topology::torus({n}, InterferenceKernel::nearest_neighbor(1));
  cfg.arrivals.assign(static_cast<std::size_t>(n), ArrivalSpec::poisson_rate(rate));
  cfg.time_model = TimeModel::continuous;
  cfg.scheduler = Scheduler::uniformized;
  cfg.horizon = 5000;
  cfg.master_seed = 77;
  return cfg;
}

}  // namespace

TEST_CASE("the dominating clock adds node capacity to total arrivals") {
  CHECK(uniformization_rate(mm1(0.5)) == Approx(1.5));
  auto cfg = poisson_ring(3, 0.25);
  CHECK(uniformization_rate(cfg) == Approx(3 * 0.25 + 3.0));
  cfg.rates = {RateFamily::Tag::shannon, 0.0};
  CHECK(uniformization_rate(cfg) == Approx(3 * 0.25 + 3 * std::log(2.0)));
}

TEST_CASE("event intensities never exceed the dominating clock") {
  auto cfg = poisson_ring(5, 0.2);
  const double big = uniformization_rate(cfg);
  Stream rng(8);
  for (int trial = 0; trial < 200; ++trial) {
    QueueState x(5);
    for (auto& v : x) v = static_cast<std::int64_t>(rng.uniform01() * 10);
    auto psi = cfg.rates.eval(x, cfg.topology);
    double total = 5 * 0.2 + std::accumulate(psi.begin(), psi.end(), 0.0);
    CHECK(total <= big + 1e-12);
  }
}

TEST_CASE("without arrivals every event is a self-loop") {
  auto cfg = poisson_ring(3, 0.0);
  auto streams = ReplicationStreams::make(1, 0);
  QueueState x(3, 0);
  double now = 0;
  for (int k = 0; k < 200; ++k) {
    auto ev = uniformized_step(x, cfg, streams, now);
    CHECK(ev.kind == EventRecord::Kind::self_loop);
    CHECK(ev.time > now);
    now = ev.time;
  }
  for (auto v : x) CHECK(v == 0);
}

TEST_CASE("events change the state by a single job") {
  auto cfg = poisson_ring(5, 0.2);
  auto streams = ReplicationStreams::make(3, 0);
  QueueState x(5, 1);
  double now = 0;
  for (int k = 0; k < 2000; ++k) {
    QueueState before = x;
    auto ev = uniformized_step(x, cfg, streams, now);
    REQUIRE(ev.time > now);
    now = ev.time;
    std::int64_t diff = 0;
    for (std::size_t i = 0; i < 5; ++i) diff += std::abs(x[i] - before[i]);
    switch (ev.kind) {
      case EventRecord::Kind::arrival:
        CHECK(diff == 1);
        CHECK(x[ev.node] == before[ev.node] + 1);
        break;
      case EventRecord::Kind::departure:
        CHECK(diff == 1);
        CHECK(x[ev.node] == before[ev.node] - 1);
        CHECK(before[ev.node] > 0);
        break;
      case EventRecord::Kind::self_loop:
        CHECK(diff == 0);
        break;
    }
    for (auto v : x) CHECK(v >= 0);
  }
}

TEST_CASE("relayed departures hand the job to a lattice neighbour") {
  auto cfg = poisson_ring(8, 0.1);
  cfg.routing.multi_hop = true;
  cfg.routing.q = 0.5;
  auto streams = ReplicationStreams::make(13, 0);
  QueueState x(8, 2);
  double now = 0;
  int relayed = 0;
  for (int k = 0; k < 5000; ++k) {
    QueueState before = x;
    auto ev = uniformized_step(x, cfg, streams, now);
    now = ev.time;
    if (ev.kind == EventRecord::Kind::departure && ev.destination >= 0) {
      ++relayed;
      auto dst = static_cast<std::size_t>(ev.destination);
      CHECK(x[dst] == before[dst] + 1);
      bool adjacent = dst == (ev.node + 1) % 8 || dst == (ev.node + 7) % 8;
      CHECK(adjacent);
    }
  }
  CHECK(relayed > 0);
}

TEST_CASE("the half-loaded single server settles at mean one") {
  auto cfg = mm1(0.5);
  auto ts = run_continuous(cfg, 0);
  std::vector<TrajectoryStats> reps{ts};
  auto est = pooled_node_mean(reps, &TrajectoryStats::batch_x, 0);
  CHECK(est.conclusive);
  CHECK(est.lo() <= 1.0);
  CHECK(est.hi() >= 1.0);
  CHECK(est.half_width < 0.25);
  // departures leave at the arrival rate in steady state
  auto dep = pooled_node_mean(reps, &TrajectoryStats::batch_service, 0);
  CHECK(dep.lo() <= 0.5);
  CHECK(dep.hi() >= 0.5);
  CHECK(ts.self_loop_fraction > 0);
  CHECK(ts.events > 0);
}

TEST_CASE("the simulated two-node segment matches its exact stationary solve") {
  ScenarioConfig cfg;
  cfg.topology = Topology::line_segment(2, InterferenceKernel::nearest_neighbor(1));
  cfg.arrivals.assign(2, ArrivalSpec::poisson_rate(0.25));
  cfg.time_model = TimeModel::continuous;
  cfg.scheduler = Scheduler::uniformized;
  cfg.horizon = 40000;
  cfg.master_seed = 5;
  auto exact = exact_stationary_auto(cfg);
  auto ts = run_continuous(cfg, 0);
  std::vector<TrajectoryStats> reps{ts};
  for (std::size_t i = 0; i < 2; ++i) {
    auto est = pooled_node_mean(reps, &TrajectoryStats::batch_x, i);
    INFO("node " << i << ": exact " << exact.mean_x[i] << " vs " << est.point << " +- "
                 << est.half_width);
    CHECK(est.lo() <= exact.mean_x[i]);
    CHECK(est.hi() >= exact.mean_x[i]);
  }
}

TEST_CASE("continuous runs are bit-reproducible") {
  auto cfg = poisson_ring(4, 0.2);
  cfg.horizon = 2000;
  auto a = run_continuous(cfg, 2);
  auto b = run_continuous(cfg, 2);
  CHECK(a.mean_x == b.mean_x);
  CHECK(a.batch_x == b.batch_x);
  CHECK(a.events == b.events);
}

TEST_CASE("time accounting matches the horizon") {
  auto cfg = poisson_ring(4, 0.2);
  cfg.horizon = 1000;
  cfg.burn_in_fraction = 0.25;
  auto ts = run_continuous(cfg, 0);
  CHECK(ts.burn_in == Approx(250.0));
  CHECK(ts.span == Approx(750.0));
  REQUIRE(ts.batch_x.size() == static_cast<std::size_t>(cfg.batches));
}
