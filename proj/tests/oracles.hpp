#pragma once

// Brute-force reference computations for the test suites. Nothing here calls into
// the code paths it is used to check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "casisr/image.hpp"

namespace oracle {

inline double keys(double x) {
  const double a = -0.5, t = std::abs(x);
  if (t <= 1) return (a + 2) * t * t * t - (a + 3) * t * t + 1;
  if (t < 2) return a * t * t * t - 5 * a * t * t + 8 * a * t - 4 * a;
  return 0.0;
}

/// Direct 2-D weighted sum over the widened Keys kernel with replicated borders.
inline casisr::ImageBuffer bicubic_resize(const casisr::ImageBuffer& in, std::size_t oh, std::size_t ow) {
  const long ih = static_cast<long>(in.height()), iw = static_cast<long>(in.width());
  const double sy = std::max(1.0, double(ih) / double(oh)), sx = std::max(1.0, double(iw) / double(ow));
  casisr::ImageBuffer out(oh, ow, in.channels());
  for (std::size_t i = 0; i < oh; ++i) {
    const double cy = (i + 0.5) * double(ih) / double(oh) - 0.5;
    for (std::size_t j = 0; j < ow; ++j) {
      const double cx = (j + 0.5) * double(iw) / double(ow) - 0.5;
      for (std::size_t c = 0; c < in.channels(); ++c) {
        double num = 0, den = 0;
        for (long p = -4 * ih; p < 5 * ih; ++p) {
          const double wy = keys((p - cy) / sy);
          if (wy == 0) continue;
          for (long q = -4 * iw; q < 5 * iw; ++q) {
            const double w = wy * keys((q - cx) / sx);
            if (w == 0) continue;
            num += w * in.at(std::clamp(p, 0L, ih - 1), std::clamp(q, 0L, iw - 1), c);
            den += w;
          }
        }
        out.at(i, j, c) = num / den;
      }
    }
  }
  return out;
}

inline double mse(const casisr::ImageBuffer& a, const casisr::ImageBuffer& b) {
  double s = 0;
  for (std::size_t y = 0; y < a.height(); ++y)
    for (std::size_t x = 0; x < a.width(); ++x)
      for (std::size_t c = 0; c < a.channels(); ++c) {
        const double d = std::clamp(a.at(y, x, c), 0.0, 1.0) - std::clamp(b.at(y, x, c), 0.0, 1.0);
        s += d * d;
      }
  return s / double(a.size());
}

/// SSIM with the 11x11 Gaussian window applied directly at every valid position.
inline double ssim(const casisr::ImageBuffer& a, const casisr::ImageBuffer& b) {
  const int k = 11, r = 5;
  double win[11][11], total = 0;
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) {
      win[i][j] = std::exp(-((i - r) * (i - r) + (j - r) * (j - r)) / (2 * 1.5 * 1.5));
      total += win[i][j];
    }
  for (auto& row : win)
    for (double& w : row) w /= total;
  const double c1 = 1e-4, c2 = 9e-4;
  double acc = 0;
  for (std::size_t c = 0; c < a.channels(); ++c) {
    double sum = 0;
    std::size_t n = 0;
    for (std::size_t y = r; y + r < a.height(); ++y)
      for (std::size_t x = r; x + r < a.width(); ++x) {
        double ma = 0, mb = 0, saa = 0, sbb = 0, sab = 0;
        for (int i = 0; i < k; ++i)
          for (int j = 0; j < k; ++j) {
            const double va = std::clamp(a.at(y + i - r, x + j - r, c), 0.0, 1.0);
            const double vb = std::clamp(b.at(y + i - r, x + j - r, c), 0.0, 1.0);
            ma += win[i][j] * va;
            mb += win[i][j] * vb;
          }
        for (int i = 0; i < k; ++i)
          for (int j = 0; j < k; ++j) {
            const double va = std::clamp(a.at(y + i - r, x + j - r, c), 0.0, 1.0) - ma;
            const double vb = std::clamp(b.at(y + i - r, x + j - r, c), 0.0, 1.0) - mb;
            saa += win[i][j] * va * va;
            sbb += win[i][j] * vb * vb;
            sab += win[i][j] * va * vb;
          }
        sum += ((2 * ma * mb + c1) * (2 * sab + c2)) / ((ma * ma + mb * mb + c1) * (saa + sbb + c2));
        ++n;
      }
    acc += sum / double(n);
  }
  return acc / double(a.channels());
}

inline casisr::ImageBuffer random_image(std::size_t h, std::size_t w, std::size_t c, std::mt19937_64& rng,
                                        double lo = 0.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  casisr::ImageBuffer img(h, w, c);
  for (double& v : img.samples()) v = u(rng);
  return img;
}

/// Smooth synthetic content: a few low-frequency sinusoids per channel, in [0,1].
inline casisr::ImageBuffer smooth_image(std::size_t h, std::size_t w, std::size_t c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  casisr::ImageBuffer img(h, w, c);
  for (std::size_t ch = 0; ch < c; ++ch) {
    const double fx = 1 + 3 * u(rng), fy = 1 + 3 * u(rng), ph = 6.28 * u(rng), ph2 = 6.28 * u(rng);
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x) {
        const double v = 0.5 + 0.25 * std::sin(fx * 6.283 * x / double(w) + ph) +
                         0.2 * std::cos(fy * 6.283 * y / double(h) + ph2) * std::sin(3.1 * x / double(w));
        img.at(y, x, ch) = std::clamp(v, 0.0, 1.0);
      }
  }
  return img;
}

}  // namespace oracle
