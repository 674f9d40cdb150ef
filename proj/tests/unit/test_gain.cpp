#include <cmath>
#include <random>

#include "casisr/gain.hpp"
#include "casisr/stability.hpp"
#include "doctest.h"

using namespace casisr;

namespace {

VectorMap diagonal(std::vector<double> diag) {
  return [diag](std::span<const double> x) {
    std::vector<double> y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = diag[i] * x[i];
    return y;
  };
}

}  // namespace

TEST_CASE("identity operator is estimated exactly for any probe count") {
  const VectorMap id = [](std::span<const double> x) { return std::vector<double>(x.begin(), x.end()); };
  const std::vector<double> base(16, 0.25);
  for (std::size_t k : {1u, 3u, 8u}) {
    const JacobianStats s = estimate_jacobian_stats(id, base, {k, 1e-3, 42});
    CHECK(s.trace_est == doctest::Approx(16).epsilon(1e-9));
    CHECK(s.frob_sq_est == doctest::Approx(16).epsilon(1e-9));
    CHECK(s.dim == 16);
    CHECK(s.probes == k);
  }
}

TEST_CASE("diag(1,3) estimates") {
  const JacobianStats s = estimate_jacobian_stats(diagonal({1, 3}), std::vector<double>{0.1, 0.2}, {256, 1e-3, 1});
  CHECK(std::abs(s.trace_est - 4) <= 0.15 * 4);
  CHECK(std::abs(s.frob_sq_est - 10) <= 0.15 * 10);
}

TEST_CASE("zero operator") {
  const VectorMap zero = [](std::span<const double> x) { return std::vector<double>(x.size(), 0.0); };
  const JacobianStats s = estimate_jacobian_stats(zero, std::vector<double>(5, 1.0), {4, 1e-3, 0});
  CHECK(s.trace_est == 0.0);
  CHECK(s.frob_sq_est == 0.0);
  CHECK_THROWS_AS(solve_lambda_interval(s, 1.0), GainError);
}

TEST_CASE("exactly probes + 1 evaluations") {
  int calls = 0;
  const VectorMap counted = [&](std::span<const double> x) {
    ++calls;
    return std::vector<double>(x.begin(), x.end());
  };
  estimate_jacobian_stats(counted, std::vector<double>(3, 0.0), {7, 1e-3, 0});
  CHECK(calls == 8);
}

TEST_CASE("estimator errors") {
  const VectorMap id = [](std::span<const double> x) { return std::vector<double>(x.begin(), x.end()); };
  CHECK_THROWS_AS(estimate_jacobian_stats(id, std::vector<double>(2), {0, 1e-3, 0}), GainError);
  CHECK_THROWS_AS(estimate_jacobian_stats(id, std::vector<double>(2), {1, 0.0, 0}), GainError);
  const VectorMap blowup = [](std::span<const double> x) {
    std::vector<double> y(x.begin(), x.end());
    if (x[0] != 0.0) y[0] = INFINITY;
    return y;
  };
  CHECK_THROWS_AS(estimate_jacobian_stats(blowup, std::vector<double>(2, 0.0), {1, 1e-3, 0}), GainError);
}

TEST_CASE("estimator is unbiased on a random linear map") {
  std::mt19937_64 rng(99);
  const lab::LinearPlant plant = lab::gaussian_plant(6, rng);
  const JacobianStats truth = plant.exact_stats();
  double tr = 0, fr = 0;
  const int seeds = 4000;
  for (int s = 0; s < seeds; ++s) {
    const JacobianStats e = estimate_jacobian_stats(plant.as_map(), std::vector<double>(6, 0.0), {1, 1.0, std::uint64_t(s)});
    tr += e.trace_est;
    fr += e.frob_sq_est;
  }
  CHECK(tr / seeds == doctest::Approx(truth.trace_est).epsilon(0.05).scale(std::sqrt(truth.frob_sq_est)));
  CHECK(fr / seeds == doctest::Approx(truth.frob_sq_est).epsilon(0.05));
}

TEST_CASE("Gamma = I4 gives (0.5, 1.5) and lambda* = 1") {
  const GainSolution s = solve_lambda_interval({4, 4, 1, 1, 4}, 1.0);
  REQUIRE(s.lambda_lo);
  CHECK(*s.lambda_lo == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(*s.lambda_hi == doctest::Approx(1.5).epsilon(1e-14));
  CHECK(s.lambda_star == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(s.c_coef == 3.0);
  CHECK(s.guaranteed);
}

TEST_CASE("Gamma = diag(1,3)") {
  const GainSolution s = solve_lambda_interval({4, 10, 1, 1, 2}, 1.0);
  CHECK(s.a_coef == 10);
  CHECK(s.b_coef == -8);
  CHECK(s.c_coef == 1);
  REQUIRE(s.lambda_lo);
  CHECK(*s.lambda_lo == doctest::Approx((8 - std::sqrt(24.0)) / 20).epsilon(1e-14));
  CHECK(*s.lambda_hi == doctest::Approx((8 + std::sqrt(24.0)) / 20).epsilon(1e-14));
  CHECK(*s.lambda_lo == doctest::Approx(0.1551).epsilon(1e-3));
  CHECK(*s.lambda_hi == doctest::Approx(0.6449).epsilon(1e-3));
  CHECK(s.lambda_star == doctest::Approx(0.4).epsilon(1e-14));
  CHECK(s.quadratic(s.lambda_star) < 0);
}

TEST_CASE("Gamma = diag(1,1,10) has no guaranteed interval") {
  const GainSolution s = solve_lambda_interval({12, 102, 1, 1, 3}, 1.0);
  CHECK_FALSE(s.lambda_lo);
  CHECK_FALSE(s.lambda_hi);
  CHECK_FALSE(s.guaranteed);
  CHECK(s.lambda_star == doctest::Approx(12.0 / 102.0).epsilon(1e-14));
}

TEST_CASE("lambda* minimizes the quadratic") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-3, 3);
  for (int trial = 0; trial < 50; ++trial) {
    const lab::LinearPlant plant = lab::gaussian_plant(1 + trial % 7, rng);
    const GainSolution s = solve_lambda_interval(plant.exact_stats(), 0.5 + trial % 3);
    const double qmin = s.quadratic(s.lambda_star);
    for (int i = 0; i < 40; ++i) CHECK(qmin <= s.quadratic(s.lambda_star + u(rng)) + 1e-12);
    if (s.lambda_lo) {
      CHECK(*s.lambda_lo < s.lambda_star);
      CHECK(s.lambda_star < *s.lambda_hi);
    }
  }
}

TEST_CASE("scaling Gamma by c and dt by 1/c leaves the interval unchanged") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const lab::LinearPlant plant = lab::near_identity_plant(5, 1.0, 0.2, rng);
    const GainSolution base = solve_lambda_interval(plant.exact_stats(), 1.0);
    for (double c : {0.25, 3.0, 17.0}) {
      const lab::LinearPlant scaled{c * plant.gamma};
      const GainSolution s = solve_lambda_interval(scaled.exact_stats(), 1.0 / c);
      REQUIRE(base.lambda_lo.has_value() == s.lambda_lo.has_value());
      if (base.lambda_lo) {
        CHECK(*s.lambda_lo == doctest::Approx(*base.lambda_lo).epsilon(1e-12));
        CHECK(*s.lambda_hi == doctest::Approx(*base.lambda_hi).epsilon(1e-12));
      }
      CHECK(s.lambda_star == doctest::Approx(base.lambda_star).epsilon(1e-12));
    }
  }
}

TEST_CASE("solver errors") {
  CHECK_THROWS_AS(solve_lambda_interval({1, 1, 1, 1, 1}, 0.0), GainError);
  CHECK_THROWS_AS(solve_lambda_interval({NAN, 1, 1, 1, 1}, 1.0), GainError);
}
