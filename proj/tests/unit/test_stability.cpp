#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include "casisr/gain.hpp"
#include "casisr/stability.hpp"
#include "doctest.h"

using namespace casisr;
using namespace casisr::lab;

TEST_CASE("identity plant with lambda = 1 zeroes the error in one step") {
  const LinearPlant plant{Eigen::MatrixXd::Identity(3, 3)};
  const Eigen::VectorXd e0 = Eigen::VectorXd::Constant(3, 2.0);
  const std::vector<double> norms = simulate_linear_loop(plant, 1.0, 1.0, 4, e0);
  REQUIRE(norms.size() == 5);
  CHECK(norms[0] == doctest::Approx(std::sqrt(12.0)));
  for (std::size_t i = 1; i < norms.size(); ++i) CHECK(norms[i] == 0.0);
}

TEST_CASE("scalar plant decays geometrically") {
  const LinearPlant plant{Eigen::MatrixXd::Constant(1, 1, 2.0)};
  const std::vector<double> norms = simulate_linear_loop(plant, 0.3, 1.0, 10, Eigen::VectorXd::Ones(1));
  for (std::size_t t = 0; t < norms.size(); ++t) CHECK(std::abs(norms[t] - std::pow(0.4, double(t))) < 1e-12);
}

TEST_CASE("oracle agrees with the closed form on worked examples") {
  const auto i4 = frobenius_interval_oracle({Eigen::MatrixXd::Identity(4, 4)}, 1.0);
  REQUIRE(i4);
  CHECK(i4->lo == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(i4->hi == doctest::Approx(1.5).epsilon(1e-12));

  Eigen::MatrixXd d13 = Eigen::MatrixXd::Zero(2, 2);
  d13(0, 0) = 1;
  d13(1, 1) = 3;
  const auto i13 = frobenius_interval_oracle({d13}, 1.0);
  REQUIRE(i13);
  CHECK(i13->lo == doctest::Approx((8 - std::sqrt(24.0)) / 20).epsilon(1e-12));
  CHECK(i13->hi == doctest::Approx((8 + std::sqrt(24.0)) / 20).epsilon(1e-12));

  Eigen::MatrixXd d1110 = Eigen::MatrixXd::Identity(3, 3);
  d1110(2, 2) = 10;
  CHECK_FALSE(frobenius_interval_oracle({d1110}, 1.0));
  CHECK_FALSE(frobenius_interval_oracle({Eigen::MatrixXd::Zero(2, 2)}, 1.0));
}

TEST_CASE("oracle and quadratic solver agree on random plants") {
  std::mt19937_64 rng(1234);
  int with_interval = 0;
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t d = std::size_t(2) << (trial % 4);
    const LinearPlant plant = near_identity_plant(d, 0.3 + 0.1 * (trial % 5), 0.05, rng);
    const double dt = trial % 2 ? 1.0 : 0.5;
    const auto o = frobenius_interval_oracle(plant, dt);
    const GainSolution s = solve_lambda_interval(plant.exact_stats(), dt);
    REQUIRE(o.has_value() == s.lambda_lo.has_value());
    if (o) {
      ++with_interval;
      CHECK(std::abs(o->lo - *s.lambda_lo) <= 1e-9 * std::max(1.0, std::abs(*s.lambda_lo)));
      CHECK(std::abs(o->hi - *s.lambda_hi) <= 1e-9 * std::max(1.0, std::abs(*s.lambda_hi)));
    }
  }
  CHECK(with_interval > 10);
}

TEST_CASE("frobenius bound dominates the simulated decay") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> n01;
  for (int trial = 0; trial < 20; ++trial) {
    const LinearPlant plant = gaussian_plant(5, rng);
    Eigen::VectorXd e0(5);
    for (auto& v : e0) v = n01(rng);
    const double lambda = 0.2 * (trial % 5);
    const double rho = contraction_frobenius(plant, lambda, 1.0);
    const std::vector<double> norms = simulate_linear_loop(plant, lambda, 1.0, 30, e0);
    for (std::size_t t = 0; t < norms.size(); ++t)
      CHECK(norms[t] <= std::pow(rho, double(t)) * norms[0] * (1 + 1e-12) + 1e-9);
  }
}

TEST_CASE("spectral radius above one diverges") {
  const LinearPlant plant{Eigen::MatrixXd::Identity(2, 2)};
  CHECK(contraction_spectral_radius(plant, 3.0, 1.0) == doctest::Approx(2.0));
  const std::vector<double> norms = simulate_linear_loop(plant, 3.0, 1.0, 10, Eigen::VectorXd::Ones(2));
  CHECK(norms.back() == doctest::Approx(std::sqrt(2.0) * 1024));
  CHECK(contraction_spectral_radius(plant, 0.5, 1.0) == doctest::Approx(0.5));
  CHECK(contraction_frobenius(plant, 0.5, 1.0) == doctest::Approx(std::sqrt(0.5)));
}

TEST_CASE("reasonability example") {
  const ReasonabilityReport r = reasonability_report(2, 8, 0.5);
  CHECK(r.p_preposition == 0.5);
  CHECK(r.p_upscale == 0.0078125);
  CHECK(r.p_degrade == 2.0);
  CHECK(r.preposition_beats_upscale);
  CHECK(r.degrade_beats_upscale);
}

TEST_CASE("reasonability holds where powers underflow") {
  const ReasonabilityReport r = reasonability_report(3000, 12000, 0.5);
  CHECK(r.p_upscale == 0.0);
  CHECK(r.preposition_beats_upscale);
  CHECK(r.degrade_beats_upscale);
  CHECK_THROWS_AS(reasonability_report(4, 4, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(reasonability_report(2, 4, 1.0), std::invalid_argument);
}

TEST_CASE("norm csv") {
  const auto path = std::filesystem::temp_directory_path() / "casisr_norms_test.csv";
  write_norm_csv(path, {1.0, 0.5, 0.25});
  std::ifstream in(path);
  std::string all((std::istreambuf_iterator<char>(in)), {});
  CHECK(all == "step,norm\n0,1\n1,0.5\n2,0.25\n");
  std::filesystem::remove(path);
}
