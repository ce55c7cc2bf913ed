#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "latqueue/arrivals.hpp"
#include "latqueue/rng.hpp"
#include "latqueue/utility.hpp"

using namespace latqueue;
using Catch::Approx;

TEST_CASE("bernoulli arrivals expose matching raw moments") {
  auto a = ArrivalSpec::bernoulli(0.3);
  CHECK(a.moment(1) == Approx(0.3));
  CHECK(a.moment(2) == Approx(0.3));
  CHECK(a.moment(3) == Approx(0.3));
  CHECK_THROWS_AS(ArrivalSpec::bernoulli(1.5), std::invalid_argument);
  CHECK_THROWS_AS(ArrivalSpec::bernoulli(-0.1), std::invalid_argument);
}

TEST_CASE("finite pmf arrivals compute moments from the table") {
  auto a = ArrivalSpec::truncated_general({0.5, 0.0, 0.5});
  CHECK(a.moment(1) == Approx(1.0));
  CHECK(a.moment(2) == Approx(2.0));
  CHECK(a.moment(3) == Approx(4.0));
  CHECK_THROWS_AS(a.moment(4), std::invalid_argument);
  CHECK_THROWS_AS(a.moment(0), std::invalid_argument);
  CHECK(a.truncation_level() == 2);

  CHECK_THROWS_AS(ArrivalSpec::truncated_general({0.5, 0.4}), std::invalid_argument);
  CHECK_THROWS_AS(ArrivalSpec::truncated_general({0.5, -0.1, 0.6}), std::invalid_argument);
  CHECK_THROWS_AS(ArrivalSpec::truncated_general({}), std::invalid_argument);
}

TEST_CASE("poisson rate arrivals carry closed-form moments but no sampler") {
  auto a = ArrivalSpec::poisson_rate(0.7);
  CHECK(a.moment(1) == Approx(0.7));
  CHECK(a.moment(2) == Approx(0.7 + 0.49));
  CHECK(a.moment(3) == Approx(0.343 + 3 * 0.49 + 0.7));
  Stream s(42);
  CHECK_THROWS_AS(a.sample(s), std::logic_error);
}

TEST_CASE("pmf sampling consumes one uniform and reproduces the table") {
  auto a = ArrivalSpec::truncated_general({0.25, 0.5, 0.25});
  Stream s(7);
  const int n = 200000;
  std::vector<int> counts(3, 0);
  for (int i = 0; i < n; ++i) {
    auto v = a.sample(s);
    REQUIRE(v >= 0);
    REQUIRE(v <= 2);
    ++counts[static_cast<std::size_t>(v)];
  }
  // 5 sigma on each cell
  for (int v = 0; v < 3; ++v) {
    double p = v == 1 ? 0.5 : 0.25;
    double sd = std::sqrt(p * (1 - p) / n);
    CHECK(std::abs(counts[v] / double(n) - p) < 5 * sd);
  }
}

TEST_CASE("weight families satisfy the growth condition") {
  for (auto u : {UtilityPair::power(1.0), UtilityPair::power(2.0),
                 UtilityPair::quadratic_inverse(), UtilityPair::exp_log_power(1.5),
                 UtilityPair::stretched_exp(0.5), UtilityPair::shannon_companion()}) {
    auto c = check_queue_weight_growth(u);
    INFO(u.name() << ": " << c.detail);
    CHECK(c.ok);
  }
}

TEST_CASE("rate score families are increasing and concave") {
  for (auto u : {UtilityPair::power(1.0), UtilityPair::power(2.0),
                 UtilityPair::quadratic_inverse(), UtilityPair::exp_log_power(1.5),
                 UtilityPair::stretched_exp(0.5), UtilityPair::shannon_companion()}) {
    auto c = check_rate_score_shape(u);
    INFO(u.name() << ": " << c.detail);
    CHECK(c.ok);
  }
}

TEST_CASE("squared weight crosses ratio ten exactly at twenty-one") {
  auto u = UtilityPair::quadratic_inverse();
  // g(y)/delta(y) = y^2/(2y+1) exceeds 10 exactly from y = 21 on
  CHECK(u.g(20) / u.delta(20) < 10.0);
  CHECK(u.g(21) / u.delta(21) > 10.0);
}

TEST_CASE("weight partial sums match closed forms") {
  auto u = UtilityPair::quadratic_inverse();
  CHECK(u.big_g(3) == Approx(14.0));  // 1 + 4 + 9
  CHECK(u.big_g(0) == Approx(0.0));
  CHECK(u.big_g(-1) == Approx(0.0));
  CHECK_THROWS_AS(u.big_g(-2), std::invalid_argument);
  CHECK(u.delta(4) == Approx(9.0));
  CHECK(u.g(0) == 0.0);
}

TEST_CASE("rate score derivatives match finite differences") {
  const double eps = 1e-6;
  for (auto u : {UtilityPair::power(0.5), UtilityPair::power(2.0),
                 UtilityPair::quadratic_inverse(), UtilityPair::exp_log_power(1.5),
                 UtilityPair::stretched_exp(0.5), UtilityPair::shannon_companion()}) {
    for (double y : {0.2, 0.5, 1.0, 2.5}) {
      double fd = (u.h(y + eps) - u.h(y - eps)) / (2 * eps);
      INFO(u.name() << " at y=" << y);
      CHECK(u.h_prime(y) == Approx(fd).epsilon(1e-5));
    }
  }
}

TEST_CASE("quadratic inverse pair uses the advertised closed forms") {
  auto u = UtilityPair::quadratic_inverse();
  CHECK(u.g(5) == Approx(25.0));
  CHECK(u.h(2.0) == Approx(-0.5));
  CHECK(u.h_prime(2.0) == Approx(0.25));
  CHECK(u.h_prime(1.0 / 3.0) == Approx(9.0));
}

TEST_CASE("lyapunov margins accept arrival means at the boundary") {
  LyapunovSpec spec;
  spec.nu = {1.0 / 3.0, 1.0 / 3.0};
  spec.epsilon = 1.0 / 30.0;
  std::vector<ArrivalSpec> ok{ArrivalSpec::bernoulli(0.3), ArrivalSpec::bernoulli(0.3)};
  CHECK_NOTHROW(spec.validate_against(ok));
  std::vector<ArrivalSpec> over{ArrivalSpec::bernoulli(0.31), ArrivalSpec::bernoulli(0.3)};
  CHECK_THROWS_AS(spec.validate_against(over), std::invalid_argument);
  spec.epsilon = 0.0;
  CHECK_THROWS_AS(spec.validate_against(ok), std::invalid_argument);
}
