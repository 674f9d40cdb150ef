#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <filesystem>
#include <optional>
#include <random>
#include <utility>
#include <vector>

#include "casisr/gain.hpp"

namespace casisr::lab {

/// A linear composite dp(x) = gamma * x with a known Jacobian.
struct LinearPlant {
  Eigen::MatrixXd gamma;

  std::size_t dim() const { return static_cast<std::size_t>(gamma.rows()); }
  VectorMap as_map() const;
  JacobianStats exact_stats() const;
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

/// Norms of e(t) under e <- (I - lambda dt Gamma) e; entry 0 is |e0|, then one entry per step.
std::vector<double> simulate_linear_loop(const LinearPlant& plant, double lambda, double delta_t, std::size_t steps,
                                         const Eigen::VectorXd& e0);

/// |I - lambda dt Gamma|_F
double contraction_frobenius(const LinearPlant& plant, double lambda, double delta_t);

/// Spectral radius of I - lambda dt Gamma.
double contraction_spectral_radius(const LinearPlant& plant, double lambda, double delta_t);

/// Direct search for {lambda : |I - lambda dt Gamma|_F < 1} by dense evaluation:
/// a grid scan (with a golden-section fallback for intervals narrower than the grid)
/// followed by bisection of both endpoints. Independent of the quadratic formula.
std::optional<Interval> frobenius_interval_oracle(const LinearPlant& plant, double delta_t, std::size_t grid = 1000);

struct ReasonabilityReport {
  double p_preposition = 0.0;  // P(a_p | a_e) = d w^d
  double p_upscale = 0.0;      // P(a_s | a_p) = d w^D
  double p_degrade = 0.0;      // P(a_d | a_s) = D w^d
  bool preposition_beats_upscale = false;
  bool degrade_beats_upscale = false;
};

/// Values as defined (they can exceed 1). Comparisons are made in the log domain so
/// they stay meaningful when the powers underflow.
ReasonabilityReport reasonability_report(std::size_t d, std::size_t big_d, double w);

/// Gamma = scale * (I + spread * G / sqrt(d)) with G standard normal.
LinearPlant near_identity_plant(std::size_t d, double scale, double spread, std::mt19937_64& rng);

/// Gamma with i.i.d. standard normal entries divided by sqrt(d).
LinearPlant gaussian_plant(std::size_t d, std::mt19937_64& rng);

void write_norm_csv(const std::filesystem::path& path, const std::vector<double>& norms);

}  // namespace casisr::lab
