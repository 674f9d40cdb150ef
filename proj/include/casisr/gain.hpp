#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace casisr {

/// A map R^d -> R^d evaluated by value, e.g. the degrade-after-upscale composite.
using VectorMap = std::function<std::vector<double>(std::span<const double>)>;

class GainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Randomized estimates of the Jacobian's trace and squared Frobenius norm.
struct JacobianStats {
  double trace_est = 0.0;
  double frob_sq_est = 0.0;
  std::size_t probes = 0;
  double step = 0.0;
  std::size_t dim = 0;
};

struct ProbeOptions {
  std::size_t probes = 8;
  double step = 1e-3;
  std::uint64_t seed = 0;
};

/// Hutchinson-style probing with Rademacher vectors and forward differences.
///
/// Each probe v gives u = (dp(base + eps v) - dp(base)) / eps, and the estimates
/// are mean(v.u) and mean(|u|^2). Both are unbiased for a linear dp. Exactly
/// probes + 1 evaluations of dp are made.
JacobianStats estimate_jacobian_stats(const VectorMap& dp, std::span<const double> base, const ProbeOptions& opts);

/// Exact trace and squared Frobenius norm of a dense row-major d x d matrix.
JacobianStats exact_jacobian_stats(std::span<const double> gamma, std::size_t dim);

struct GainSolution {
  double a_coef = 0.0;  // dt^2 * sum Gamma_ij^2
  double b_coef = 0.0;  // -2 dt * sum Gamma_ii
  double c_coef = 0.0;  // d - 1
  double delta_t = 1.0;
  std::optional<double> lambda_lo;
  std::optional<double> lambda_hi;
  double lambda_star = 0.0;
  /// True when the Frobenius contraction interval exists and lambda_star lies in it.
  bool guaranteed = false;

  /// A*l^2 + B*l + C; negative exactly on the contraction interval.
  double quadratic(double lambda) const { return (a_coef * lambda + b_coef) * lambda + c_coef; }
};

/// Solves A l^2 + B l + (d-1) < 0, which is |I - l dt Gamma|_F^2 < 1 expanded.
/// lambda_star is the quadratic's minimizer trace / (dt * frob^2) whether or not
/// the interval exists.
GainSolution solve_lambda_interval(const JacobianStats& stats, double delta_t);

}  // namespace casisr
