#include "casisr/stability.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace casisr::lab {

namespace {

double frob_sq(const LinearPlant& plant, double lambda, double delta_t) {
  const auto d = plant.gamma.rows();
  const Eigen::MatrixXd m = Eigen::MatrixXd::Identity(d, d) - lambda * delta_t * plant.gamma;
  return m.squaredNorm();
}

}  // namespace

VectorMap LinearPlant::as_map() const {
  return [g = gamma](std::span<const double> x) {
    const Eigen::Map<const Eigen::VectorXd> v(x.data(), static_cast<Eigen::Index>(x.size()));
    const Eigen::VectorXd y = g * v;
    return std::vector<double>(y.data(), y.data() + y.size());
  };
}

JacobianStats LinearPlant::exact_stats() const {
  JacobianStats s;
  s.dim = dim();
  s.probes = 1;
  s.step = 1.0;
  s.trace_est = gamma.trace();
  s.frob_sq_est = gamma.squaredNorm();
  return s;
}

std::vector<double> simulate_linear_loop(const LinearPlant& plant, double lambda, double delta_t, std::size_t steps,
                                         const Eigen::VectorXd& e0) {
  if (e0.size() != plant.gamma.rows()) throw std::invalid_argument("e0 dimension mismatch");
  const auto d = plant.gamma.rows();
  const Eigen::MatrixXd m = Eigen::MatrixXd::Identity(d, d) - lambda * delta_t * plant.gamma;
  std::vector<double> norms;
  norms.reserve(steps + 1);
  Eigen::VectorXd e = e0;
  norms.push_back(e.norm());
  for (std::size_t s = 0; s < steps; ++s) {
    e = m * e;
    norms.push_back(e.norm());
  }
  return norms;
}

double contraction_frobenius(const LinearPlant& plant, double lambda, double delta_t) {
  return std::sqrt(frob_sq(plant, lambda, delta_t));
}

double contraction_spectral_radius(const LinearPlant& plant, double lambda, double delta_t) {
  const auto d = plant.gamma.rows();
  const Eigen::MatrixXd m = Eigen::MatrixXd::Identity(d, d) - lambda * delta_t * plant.gamma;
  return m.eigenvalues().cwiseAbs().maxCoeff();
}

std::optional<Interval> frobenius_interval_oracle(const LinearPlant& plant, double delta_t, std::size_t grid) {
  if (grid < 100) throw std::invalid_argument("oracle grid must have >= 100 points");
  const double gnorm = delta_t * plant.gamma.norm();
  if (gnorm == 0.0) return std::nullopt;
  // Outside |lambda| < (1 + sqrt d) / |dt Gamma|_F the reverse triangle inequality gives a norm >= 1.
  const double bound = (1.0 + std::sqrt(static_cast<double>(plant.dim()))) / gnorm * 1.01;
  const auto inside = [&](double l) { return frob_sq(plant, l, delta_t) < 1.0; };

  std::optional<double> seed;
  for (std::size_t i = 0; i <= grid && !seed; ++i) {
    const double l = -bound + 2.0 * bound * static_cast<double>(i) / static_cast<double>(grid);
    if (inside(l)) seed = l;
  }
  if (!seed) {
    // The squared norm is a convex quadratic in lambda; golden-section finds its minimum.
    const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = -bound, b = bound;
    double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
    double f1 = frob_sq(plant, x1, delta_t), f2 = frob_sq(plant, x2, delta_t);
    for (int it = 0; it < 300 && (b - a) > 1e-16 * bound; ++it) {
      if (f1 < f2) {
        b = x2;
        x2 = x1;
        f2 = f1;
        x1 = b - phi * (b - a);
        f1 = frob_sq(plant, x1, delta_t);
      } else {
        a = x1;
        x1 = x2;
        f1 = f2;
        x2 = a + phi * (b - a);
        f2 = frob_sq(plant, x2, delta_t);
      }
    }
    const double m = 0.5 * (a + b);
    if (!inside(m)) return std::nullopt;
    seed = m;
  }

  const auto bisect = [&](double in, double out) {
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (in + out);
      if (mid == in || mid == out) break;
      (inside(mid) ? in : out) = mid;
    }
    return 0.5 * (in + out);
  };
  return Interval{bisect(*seed, -bound), bisect(*seed, bound)};
}

ReasonabilityReport reasonability_report(std::size_t d, std::size_t big_d, double w) {
  if (!(w > 0.0 && w < 1.0)) throw std::invalid_argument("w must lie in (0, 1)");
  if (d < 1 || d >= big_d) throw std::invalid_argument("require 1 <= d < D");
  const double dd = static_cast<double>(d), bd = static_cast<double>(big_d);
  ReasonabilityReport r;
  r.p_preposition = dd * std::pow(w, dd);
  r.p_upscale = dd * std::pow(w, bd);
  r.p_degrade = bd * std::pow(w, dd);
  const double lw = std::log(w);
  const double log_pre = std::log(dd) + dd * lw;
  const double log_up = std::log(dd) + bd * lw;
  const double log_deg = std::log(bd) + dd * lw;
  r.preposition_beats_upscale = log_pre > log_up;
  r.degrade_beats_upscale = log_deg > log_up;
  return r;
}

LinearPlant near_identity_plant(std::size_t d, double scale, double spread, std::mt19937_64& rng) {
  std::normal_distribution<double> n01(0.0, 1.0);
  const auto n = static_cast<Eigen::Index>(d);
  Eigen::MatrixXd g(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) g(i, j) = n01(rng);
  return {scale * (Eigen::MatrixXd::Identity(n, n) + spread / std::sqrt(static_cast<double>(d)) * g)};
}

LinearPlant gaussian_plant(std::size_t d, std::mt19937_64& rng) {
  std::normal_distribution<double> n01(0.0, 1.0);
  const auto n = static_cast<Eigen::Index>(d);
  Eigen::MatrixXd g(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) g(i, j) = n01(rng) / std::sqrt(static_cast<double>(d));
  return {g};
}

void write_norm_csv(const std::filesystem::path& path, const std::vector<double>& norms) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "step,norm\n";
  char buf[64];
  for (std::size_t i = 0; i < norms.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g", norms[i]);
    out << i << ',' << buf << '\n';
  }
}

}  // namespace casisr::lab
