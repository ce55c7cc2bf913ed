#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <vector>

#include "latqueue/exact.hpp"

using namespace latqueue;
using Catch::Approx;

namespace {

ScenarioConfig single_discrete(double lambda) {
  ScenarioConfig cfg;
  cfg.topology = Topology::line_segment(1, InterferenceKernel::nearest_neighbor(1));
  cfg.arrivals = {ArrivalSpec::bernoulli(lambda)};
  cfg.horizon = 100;
  return cfg;
}

ScenarioConfig single_continuous(double rate) {
  ScenarioConfig cfg;
  cfg.topology = Topology::line_segment(1, InterferenceKernel::nearest_neighbor(1));
  cfg.arrivals = {ArrivalSpec::poisson_rate(rate)};
  cfg.time_model = TimeModel::continuous;
  cfg.scheduler = Scheduler::uniformized;
  cfg.horizon = 100;
  return cfg;
}

ScenarioConfig pair_discrete(double lambda) {
  ScenarioConfig cfg;
  cfg.topology = Topology::line_segment(2, InterferenceKernel::nearest_neighbor(1));
  cfg.arrivals.assign(2, ArrivalSpec::bernoulli(lambda));
  cfg.horizon = 100;
  return cfg;
}

}  // namespace

TEST_CASE("a lone half-loaded slotted queue lives on {0,1}") {
  auto res = exact_stationary(single_discrete(0.5), 10);
  CHECK(res.states == 11);
  CHECK(res.pi[res.index_of(std::vector<std::int64_t>{0})] == Approx(0.5).margin(1e-12));
  CHECK(res.pi[res.index_of(std::vector<std::int64_t>{1})] == Approx(0.5).margin(1e-12));
  CHECK(res.pi[res.index_of(std::vector<std::int64_t>{2})] == Approx(0.0).margin(1e-12));
  CHECK(res.mean_x[0] == Approx(0.5).margin(1e-12));
  CHECK(res.boundary_mass == Approx(0.0).margin(1e-14));
  CHECK(res.residual < 1e-10);
}

TEST_CASE("the truncated birth-death chain is geometric") {
  auto res = exact_stationary(single_continuous(0.5), 50);
  const double rho = 0.5;
  const double norm = (1 - rho) / (1 - std::pow(rho, 51));
  for (std::int64_t k = 0; k <= 50; ++k) {
    CHECK(res.pi[static_cast<std::size_t>(k)] ==
          Approx(norm * std::pow(rho, static_cast<double>(k))).margin(1e-12));
  }
  CHECK(res.mean_x[0] == Approx(0.999999999999977).margin(1e-12));
  CHECK(res.mean_x[0] == Approx(1.0).margin(1e-6));
  CHECK(res.mean_x2[0] == Approx(2.999999999998800).margin(1e-11));
  CHECK(res.pi[0] == Approx(0.5).margin(1e-12));
  CHECK(res.residual < 1e-10);
  // departures balance admitted arrivals
  CHECK(res.mean_psi[0] == Approx(0.5 - res.leak[0]).margin(1e-10));
}

TEST_CASE("no arrivals concentrate all mass at the origin") {
  auto res = exact_stationary(single_discrete(0.0), 5);
  CHECK(res.pi[0] == Approx(1.0).margin(1e-12));
  CHECK(res.mean_x[0] == Approx(0.0).margin(1e-14));
}

TEST_CASE("the interfering pair matches its frozen solve") {
  auto res = exact_stationary(pair_discrete(0.3), 40);
  CHECK(res.states == 41 * 41);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(res.mean_x[i] == Approx(0.469018867811).margin(1e-9));
    CHECK(res.mean_x2[i] == Approx(0.659425471545).margin(1e-9));
    CHECK(res.mean_g[i] == Approx(res.mean_x2[i]).margin(1e-12));
    CHECK(res.mean_delta[i] == Approx(2 * res.mean_x[i] + 1).margin(1e-12));
    // throughput balances the offered load up to the (tiny) cap leak
    CHECK(res.mean_psi[i] == Approx(0.3 - res.leak[i]).margin(1e-10));
  }
  CHECK(res.boundary_mass < 1e-12);
  CHECK(res.residual < 1e-10);
}

TEST_CASE("the state index walks the mixed-radix layout") {
  auto res = exact_stationary(pair_discrete(0.1), 4);
  CHECK(res.index_of(std::vector<std::int64_t>{0, 0}) == 0);
  CHECK(res.index_of(std::vector<std::int64_t>{0, 3}) == 3);
  CHECK(res.index_of(std::vector<std::int64_t>{2, 1}) == 11);
  double total = 0;
  for (double p : res.pi) total += p;
  CHECK(total == Approx(1.0).margin(1e-12));
}

TEST_CASE("the auto cap doubles until the boundary mass is negligible") {
  auto cfg = single_continuous(0.9);
  auto res = exact_stationary_auto(cfg, 2, 1e-6);
  CHECK(res.cap == 128);
  CHECK(res.boundary_mass < 1e-6);
  // rho/(1-rho) = 9 up to truncation
  CHECK(res.mean_x[0] == Approx(9.0).epsilon(1e-3));
}

TEST_CASE("solver guard rails") {
  auto cfg = single_discrete(0.4);
  CHECK_THROWS_AS(exact_stationary(cfg, 0), std::invalid_argument);
  CHECK_THROWS_AS(exact_stationary(cfg, 3'000'000), std::invalid_argument);

  auto d1 = single_discrete(0.4);
  d1.scheduler = Scheduler::d1;
  CHECK_THROWS_AS(exact_stationary(d1, 5), std::invalid_argument);

  ScenarioConfig relay;
  relay.topology = Topology::torus({8}, InterferenceKernel::nearest_neighbor(1));
  relay.arrivals.assign(8, ArrivalSpec::bernoulli(0.1));
  relay.routing.multi_hop = true;
  relay.routing.q = 0.5;
  relay.horizon = 100;
  CHECK_THROWS_AS(exact_stationary(relay, 3), std::invalid_argument);
}
