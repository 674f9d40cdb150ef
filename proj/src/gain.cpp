#include "casisr/gain.hpp"

#include <cmath>
#include <random>
#include <string>

namespace casisr {

JacobianStats estimate_jacobian_stats(const VectorMap& dp, std::span<const double> base, const ProbeOptions& opts) {
  if (opts.probes == 0) throw GainError("probe count must be >= 1");
  if (!(opts.step > 0.0)) throw GainError("probe step must be > 0");
  const std::size_t d = base.size();

  const std::vector<double> f0 = dp(base);
  if (f0.size() != d) throw GainError("dp changed the vector dimension");

  std::mt19937_64 rng(opts.seed);
  std::vector<double> v(d), shifted(d);
  double trace_sum = 0.0, frob_sum = 0.0;
  for (std::size_t k = 0; k < opts.probes; ++k) {
    for (std::size_t i = 0; i < d; ++i) {
      v[i] = (rng() >> 63) ? 1.0 : -1.0;
      shifted[i] = base[i] + opts.step * v[i];
    }
    const std::vector<double> f1 = dp(shifted);
    if (f1.size() != d) throw GainError("dp changed the vector dimension");
    double vu = 0.0, uu = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      const double u = (f1[i] - f0[i]) / opts.step;
      vu += v[i] * u;
      uu += u * u;
    }
    if (!std::isfinite(vu) || !std::isfinite(uu)) {
      throw GainError("non-finite directional derivative at probe " + std::to_string(k) +
                      " (step too small for the operator's precision?)");
    }
    trace_sum += vu;
    frob_sum += uu;
  }
  const auto k = static_cast<double>(opts.probes);
  return {trace_sum / k, frob_sum / k, opts.probes, opts.step, d};
}

JacobianStats exact_jacobian_stats(std::span<const double> gamma, std::size_t dim) {
  if (gamma.size() != dim * dim) throw GainError("gamma must be dim x dim");
  JacobianStats s;
  s.dim = dim;
  s.probes = 1;
  s.step = 1.0;
  for (std::size_t i = 0; i < dim; ++i) {
    s.trace_est += gamma[i * dim + i];
    for (std::size_t j = 0; j < dim; ++j) s.frob_sq_est += gamma[i * dim + j] * gamma[i * dim + j];
  }
  return s;
}

GainSolution solve_lambda_interval(const JacobianStats& stats, double delta_t) {
  if (!(delta_t > 0.0)) throw GainError("delta_t must be > 0");
  if (!std::isfinite(stats.trace_est) || !std::isfinite(stats.frob_sq_est)) {
    throw GainError("non-finite Jacobian statistics");
  }
  if (stats.frob_sq_est <= 0.0) {
    throw GainError("degenerate operator: zero Jacobian, no gain can be derived");
  }

  GainSolution sol;
  sol.delta_t = delta_t;
  sol.a_coef = delta_t * delta_t * stats.frob_sq_est;
  sol.b_coef = -2.0 * delta_t * stats.trace_est;
  sol.c_coef = static_cast<double>(stats.dim) - 1.0;
  if (!std::isfinite(sol.a_coef) || !std::isfinite(sol.b_coef)) throw GainError("non-finite quadratic coefficients");

  const double a = sol.a_coef, b = sol.b_coef, c = sol.c_coef;
  sol.lambda_star = -b / (2.0 * a);

  const double disc = b * b - 4.0 * a * c;
  if (disc > 0.0) {
    // Cancellation-free root pair.
    const double q = -0.5 * (b + std::copysign(std::sqrt(disc), b));
    double r1 = q / a;
    double r2 = (q != 0.0) ? c / q : -r1;
    if (r1 > r2) std::swap(r1, r2);
    sol.lambda_lo = r1;
    sol.lambda_hi = r2;
    sol.guaranteed = true;
  }
  return sol;
}

}  // namespace casisr
