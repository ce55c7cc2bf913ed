#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <vector>

#include "latqueue/analysis.hpp"
#include "latqueue/rng.hpp"

using namespace latqueue;
using Catch::Approx;

namespace {

ScenarioConfig drift_ring(double lambda = 0.25) {
  ScenarioConfig cfg;
  cfg.topology = Topology::torus({3}, InterferenceKernel::nearest_neighbor(1));
  cfg.arrivals.assign(3, ArrivalSpec::bernoulli(lambda));
  cfg.horizon = 100;
  cfg.lyapunov = LyapunovSpec{{1.0 / 3, 1.0 / 3, 1.0 / 3}, 1.0 / 12,
                              UtilityPair::quadratic_inverse()};
  return cfg;
}

// Independent drift oracle: enumerate every joint arrival/service outcome
// under thinned services and average F(x') - F(x) directly.
double drift_brute(const ScenarioConfig& cfg, const QueueState& x) {
  const auto& spec = *cfg.lyapunov;
  const std::size_t n = x.size();
  auto psi = cfg.rates.eval(x, cfg.topology);
  double acc = 0;
  for (std::size_t mask = 0; mask < (1u << (2 * n)); ++mask) {
    double p = 1;
    QueueState next = x;
    for (std::size_t i = 0; i < n; ++i) {
      bool arrive = mask & (1u << i);
      bool serve = mask & (1u << (n + i));
      double lam = cfg.arrivals[i].mean();
      p *= arrive ? lam : 1 - lam;
      p *= serve ? psi[i] : 1 - psi[i];
      if (p == 0) break;
      next[i] += (arrive ? 1 : 0) - (serve ? 1 : 0);
    }
    if (p == 0) continue;
    double df = 0;
    for (std::size_t i = 0; i < n; ++i)
      df += spec.weight(i) * (spec.utility.big_g(next[i]) - spec.utility.big_g(x[i]));
    acc += p * df;
  }
  return acc;
}

MomentEstimate fake(double point, double hw, bool conclusive = true) {
  MomentEstimate e;
  e.point = point;
  e.half_width = hw;
  e.batches = conclusive ? 20 : 5;
  e.conclusive = conclusive;
  return e;
}

}  // namespace

TEST_CASE("single-node drift closed forms") {
  LyapunovSpec spec{{1.0}, 0.5, UtilityPair::quadratic_inverse()};
  std::vector<std::int64_t> x{0};
  std::vector<double> lambda{0.5}, psi{0.0};
  // empty queue: only the arrival term survives, g(1) = 1
  CHECK(drift_exact(x, lambda, psi, spec) == Approx(0.5));
  x[0] = 5;
  psi[0] = 1.0;
  // 0.5 * 0 * 36 - 0.5 * 1 * 25
  CHECK(drift_exact(x, lambda, psi, spec) == Approx(-12.5));
}

TEST_CASE("exact drift matches joint enumeration on the three-ring") {
  auto cfg = drift_ring();
  QueueState x(3);
  for (x[0] = 0; x[0] <= 4; ++x[0])
    for (x[1] = 0; x[1] <= 4; ++x[1])
      for (x[2] = 0; x[2] <= 4; ++x[2]) {
        double formula = drift_exact(cfg, x);
        double brute = drift_brute(cfg, x);
        INFO("state " << x[0] << "," << x[1] << "," << x[2]);
        CHECK(formula == Approx(brute).margin(1e-12));
      }
  CHECK(drift_exact(cfg, QueueState{3, 3, 3}) == Approx(11.25));
  CHECK(drift_exact(cfg, QueueState{5, 0, 2}) == Approx(-88.392857142857139).epsilon(1e-12));
}

TEST_CASE("drift bound chain orders exact, intermediate and bound") {
  auto cfg = drift_ring();
  const auto& spec = *cfg.lyapunov;
  std::vector<double> lambda(3, 0.25);
  Stream rng(17);
  for (int trial = 0; trial < 300; ++trial) {
    QueueState x(3);
    for (auto& v : x) v = static_cast<std::int64_t>(rng.uniform01() * 12);
    auto psi = cfg.rates.eval(x, cfg.topology);
    double ex = drift_exact(x, lambda, psi, spec);
    double mid = drift_intermediate(x, lambda, psi, spec);
    double top = drift_bound(x, spec);
    double corr = drift_correction(x, psi, spec);
    CHECK(ex <= mid + 1e-9);
    CHECK(mid <= top + corr + 1e-9);
    CHECK(corr <= 1e-9);  // the uniform target rate is witness-induced
  }
  CHECK(drift_bound(QueueState{0, 0, 0}, spec) == Approx(27.0));
}

TEST_CASE("drift negativity threshold on the three-ring") {
  auto cfg = drift_ring();
  auto thr = drift_negativity_threshold(cfg, 8);
  REQUIRE(thr.has_value());
  CHECK(*thr == 5);
  // shell check at the certified threshold: every state with max >= 5 drifts down
  QueueState probe{5, 0, 2};
  CHECK(drift_exact(cfg, probe) < 0);
  CHECK_THROWS_AS(drift_negativity_threshold(cfg, 400), std::invalid_argument);
  auto bare = cfg;
  bare.lyapunov.reset();
  CHECK_THROWS_AS(drift_negativity_threshold(bare, 4), std::invalid_argument);
}

TEST_CASE("exact drift rejects non-bernoulli batches") {
  auto cfg = drift_ring();
  cfg.arrivals.assign(3, ArrivalSpec::truncated_general({0.75, 0.25}));
  CHECK_THROWS_AS(drift_exact(cfg, QueueState{1, 1, 1}), std::invalid_argument);
}

TEST_CASE("first-moment bound arithmetic and verdicts") {
  LyapunovSpec spec{{1.0, 1.0}, 0.5, UtilityPair::quadratic_inverse()};
  std::vector<MomentEstimate> e_g{fake(2.0, 0.1), fake(2.0, 0.1)};
  std::vector<MomentEstimate> e_d{fake(3.0, 0.1), fake(3.0, 0.1)};
  auto r = bound_first_moment(e_g, e_d, spec);
  CHECK(r.name == "first-moment");
  CHECK(r.lhs == Approx(4.0));
  CHECK(r.rhs == Approx(12.0));
  CHECK(r.lhs_ci == Approx(0.2));
  CHECK(r.rhs_ci == Approx(0.4));
  CHECK(r.verdict == BoundReport::Verdict::holds);

  e_g = {fake(20.0, 0.1), fake(20.0, 0.1)};
  CHECK(bound_first_moment(e_g, e_d, spec).verdict == BoundReport::Verdict::violated);

  e_g = {fake(2.0, 0.1, false), fake(2.0, 0.1)};
  CHECK(bound_first_moment(e_g, e_d, spec).verdict == BoundReport::Verdict::inconclusive);

  std::vector<MomentEstimate> short_g{fake(2.0, 0.1)};
  CHECK_THROWS_AS(bound_first_moment(short_g, e_d, spec), std::invalid_argument);
}

TEST_CASE("bernoulli second-moment coefficients have closed forms") {
  auto c = second_moment_coefficients({ArrivalSpec::bernoulli(0.3)});
  CHECK(c.a_i[0] == Approx(1.26));   // 6 lambda (1 - lambda)
  CHECK(c.b_i[0] == Approx(0.162));  // 6 lambda^3
  // a two-point batch with the same law gives the same coefficients
  auto c2 = second_moment_coefficients({ArrivalSpec::truncated_general({0.7, 0.3})});
  CHECK(c2.a_i[0] == Approx(c.a_i[0]));
  CHECK(c2.b_i[0] == Approx(c.b_i[0]));
  auto z = second_moment_coefficients({ArrivalSpec::bernoulli(0.0)});
  CHECK(z.a_i[0] == 0.0);
  CHECK(z.b_i[0] == 0.0);
}

TEST_CASE("second-moment bound reports both aggregate and per-node forms") {
  LyapunovSpec spec{{0.5, 0.5}, 0.1, UtilityPair::quadratic_inverse()};
  std::vector<ArrivalSpec> arr(2, ArrivalSpec::bernoulli(0.3));
  std::vector<MomentEstimate> e_x{fake(1.0, 0.05), fake(1.0, 0.05)};
  std::vector<MomentEstimate> e_x2{fake(3.0, 0.2), fake(3.0, 0.2)};
  auto reports = bound_second_moment(arr, spec, e_x, e_x2);
  REQUIRE(reports.size() == 2);
  CHECK(reports[0].name == "second-moment");
  CHECK(reports[1].name == "second-moment-pernode");
  // weights 1/nu^2 = 4 per node
  CHECK(reports[0].lhs == Approx(0.1 * 24.0));
  double big_a = 2 * 4 * 1.26, big_b = 2 * 4 * 0.162;
  CHECK(reports[0].rhs == Approx(big_a * 8.0 + big_b));
  CHECK(reports[1].lhs == Approx(3 * 0.1 * 24.0));
  CHECK(reports[1].rhs == Approx(4 * (1.26 * 1.0 + 0.162) * 2));
  CHECK(reports[0].verdict == BoundReport::Verdict::holds);
  CHECK(reports[1].verdict == BoundReport::Verdict::holds);

  LyapunovSpec wrong{{0.5, 0.5}, 0.1, UtilityPair::power(1.0)};
  CHECK_THROWS_AS(bound_second_moment(arr, wrong, e_x, e_x2), std::invalid_argument);
}

TEST_CASE("relay mean bounds match their closed forms") {
  auto e = fake(2.0, 0.1);
  auto d = bound_multihop_discrete(0.125, 0.25, 0.5, 1, RoutingDegree::power, e);
  CHECK(d.name == "multihop-mean");
  CHECK(d.rhs == Approx(7.125));
  CHECK(d.verdict == BoundReport::Verdict::holds);
  CHECK(d.note.empty());

  auto c = bound_multihop_continuous(0.25, 0.5, 1, e);
  CHECK(c.name == "multihop-mean-ct");
  CHECK(c.rhs == Approx(6.0));
  // near-certain exit approaches the q = 1 limit of 3
  CHECK(bound_multihop_continuous(0.25, 0.999999, 1, e).rhs == Approx(3.0).epsilon(1e-4));

  CHECK_THROWS_AS(bound_multihop_discrete(0.125, 0.34, 0.5, 1, RoutingDegree::power, e),
                  std::invalid_argument);
  CHECK_THROWS_AS(bound_multihop_discrete(0.125, 0.25, 1.0, 1, RoutingDegree::power, e),
                  std::invalid_argument);
  CHECK_THROWS_AS(bound_multihop_continuous(0.25, 0.0, 1, e), std::invalid_argument);

  // the true-neighbour count deviates from 2^d only beyond d = 2
  CHECK(bound_multihop_discrete(0.1, 0.1, 0.5, 2, RoutingDegree::lattice, e).note.empty());
  CHECK_FALSE(bound_multihop_discrete(0.05, 0.05, 0.5, 3, RoutingDegree::lattice, e).note.empty());
}

TEST_CASE("window verdicts follow the two-window heuristic") {
  CHECK(window_verdict(0, 0) == StabilityVerdict::stabilizing);
  CHECK(window_verdict(10, 10.5) == StabilityVerdict::stabilizing);
  CHECK(window_verdict(10, 16) == StabilityVerdict::growing);
  CHECK(window_verdict(0, 5) == StabilityVerdict::growing);
  CHECK(window_verdict(10, 12) == StabilityVerdict::inconclusive);
  CHECK(std::string(verdict_name(StabilityVerdict::growing)) == "growing");
}

TEST_CASE("sweep points rewrite arrivals and pool replication verdicts") {
  auto cfg = drift_ring();
  cfg.replications = 2;
  std::vector<double> seen_lambda;
  int calls = 0;
  auto runner = [&](const ScenarioConfig& c, std::uint64_t rep) {
    CHECK_FALSE(c.lyapunov.has_value());
    seen_lambda.push_back(c.arrivals[0].mean());
    CHECK(rep == static_cast<std::uint64_t>(calls));
    ++calls;
    TrajectoryStats ts;
    ts.window_first = 10;
    ts.window_second = rep == 0 ? 10.2 : 20;  // disagreeing replications
    return ts;
  };
  auto row = sweep_point(cfg, 0.31, runner);
  CHECK(row.lambda == Approx(0.31));
  CHECK(seen_lambda == std::vector<double>{0.31, 0.31});
  CHECK(row.verdict == StabilityVerdict::inconclusive);
  CHECK(row.window_first == Approx(10.0));
  CHECK(row.window_second == Approx(15.1));

  auto agree = [&](const ScenarioConfig&, std::uint64_t) {
    TrajectoryStats ts;
    ts.window_first = 10;
    ts.window_second = 10.1;
    return ts;
  };
  CHECK(sweep_point(cfg, 0.2, agree).verdict == StabilityVerdict::stabilizing);
}

TEST_CASE("weighted trend test reproduces the reference fit") {
  std::vector<double> xs{8, 16, 32, 64};
  std::vector<MomentEstimate> ys{fake(2.0, 0.05), fake(2.02, 0.04), fake(1.98, 0.06),
                                 fake(2.01, 0.05)};
  auto t = wls_trend(xs, ys);
  CHECK(t.slope == Approx(-0.000036609748190).margin(1e-12));
  CHECK(t.slope_se == Approx(0.000543475231392).margin(1e-12));
  CHECK(t.nonincreasing_95);

  // a strongly increasing series fails the one-sided test
  std::vector<MomentEstimate> up{fake(1.0, 0.01), fake(2.0, 0.01), fake(3.0, 0.01),
                                 fake(4.0, 0.01)};
  CHECK_FALSE(wls_trend(xs, up).nonincreasing_95);

  std::vector<double> two{1, 2};
  std::vector<MomentEstimate> twoy{fake(1.0, 0.01), fake(2.0, 0.01)};
  CHECK_THROWS_AS(wls_trend(two, twoy), std::invalid_argument);
  std::vector<MomentEstimate> flat{fake(1.0, 0.0), fake(2.0, 0.01), fake(3.0, 0.01)};
  std::vector<double> three{1, 2, 3};
  CHECK_THROWS_AS(wls_trend(three, flat), std::invalid_argument);
}

TEST_CASE("zero arrivals give a degenerate bound that still holds") {
  LyapunovSpec spec{{0.5}, 0.1, UtilityPair::quadratic_inverse()};
  std::vector<ArrivalSpec> arr{ArrivalSpec::bernoulli(0.0)};
  std::vector<MomentEstimate> zero{exact_estimate(0.0)};
  auto reports = bound_second_moment(arr, spec, zero, zero);
  for (const auto& r : reports) {
    CHECK(r.lhs == 0.0);
    CHECK(r.rhs == 0.0);
    CHECK(r.verdict == BoundReport::Verdict::holds);
  }
}
