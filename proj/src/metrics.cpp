#include "casisr/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace casisr {

namespace {

ImageBuffer prepare(const ImageBuffer& img, const MetricOptions& opts) {
  ImageBuffer out = clamp_unit(img);
  if (opts.y_channel && out.channels() == 3) out = to_luma(out);
  return out;
}

// Valid-region separable Gaussian filter of a single channel.
std::vector<double> filter_valid(const std::vector<double>& plane, std::size_t h, std::size_t w,
                                 const std::vector<double>& taps) {
  const std::size_t k = taps.size();
  const std::size_t oh = h - k + 1, ow = w - k + 1;
  std::vector<double> horiz(h * ow);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (std::size_t t = 0; t < k; ++t) acc += taps[t] * plane[y * w + x + t];
      horiz[y * ow + x] = acc;
    }
  std::vector<double> out(oh * ow);
  for (std::size_t y = 0; y < oh; ++y)
    for (std::size_t x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (std::size_t t = 0; t < k; ++t) acc += taps[t] * horiz[(y + t) * ow + x];
      out[y * ow + x] = acc;
    }
  return out;
}

}  // namespace

ImageBuffer to_luma(const ImageBuffer& rgb) {
  if (rgb.channels() != 3) throw ImageError("to_luma: expected 3 channels");
  ImageBuffer y(rgb.height(), rgb.width(), 1);
  for (std::size_t r = 0; r < rgb.height(); ++r)
    for (std::size_t c = 0; c < rgb.width(); ++c) {
      y.at(r, c, 0) = (16.0 + 65.481 * rgb.at(r, c, 0) + 128.553 * rgb.at(r, c, 1) + 24.966 * rgb.at(r, c, 2)) / 255.0;
    }
  return y;
}

double psnr(const ImageBuffer& x, const ImageBuffer& ref, const MetricOptions& opts) {
  require_same_shape(x, ref, "psnr");
  const ImageBuffer a = prepare(x, opts), b = prepare(ref, opts);
  const auto sa = a.samples(), sb = b.samples();
  double sum = 0.0;
  for (std::size_t i = 0; i < sa.size(); ++i) {
    const double d = sa[i] - sb[i];
    sum += d * d;
  }
  const double mse = sum / static_cast<double>(sa.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

std::vector<double> ssim_gaussian_taps() {
  std::vector<double> taps(kSsimWindow);
  const double center = (kSsimWindow - 1) / 2.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < kSsimWindow; ++i) {
    const double d = static_cast<double>(i) - center;
    taps[i] = std::exp(-(d * d) / (2.0 * kSsimSigma * kSsimSigma));
    sum += taps[i];
  }
  for (double& t : taps) t /= sum;
  return taps;
}

double ssim(const ImageBuffer& x, const ImageBuffer& ref, const MetricOptions& opts) {
  require_same_shape(x, ref, "ssim");
  if (std::min(x.height(), x.width()) < kSsimWindow) {
    throw ImageError("ssim: images must be at least 11x11");
  }
  const ImageBuffer a = prepare(x, opts), b = prepare(ref, opts);
  const std::size_t h = a.height(), w = a.width(), ch = a.channels();
  const auto taps = ssim_gaussian_taps();

  double total = 0.0;
  std::vector<double> pa(h * w), pb(h * w), paa(h * w), pbb(h * w), pab(h * w);
  for (std::size_t c = 0; c < ch; ++c) {
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t xx = 0; xx < w; ++xx) {
        const std::size_t i = y * w + xx;
        pa[i] = a.at(y, xx, c);
        pb[i] = b.at(y, xx, c);
        paa[i] = pa[i] * pa[i];
        pbb[i] = pb[i] * pb[i];
        pab[i] = pa[i] * pb[i];
      }
    const auto mu_a = filter_valid(pa, h, w, taps);
    const auto mu_b = filter_valid(pb, h, w, taps);
    const auto e_aa = filter_valid(paa, h, w, taps);
    const auto e_bb = filter_valid(pbb, h, w, taps);
    const auto e_ab = filter_valid(pab, h, w, taps);
    double sum = 0.0;
    for (std::size_t i = 0; i < mu_a.size(); ++i) {
      const double ma = mu_a[i], mb = mu_b[i];
      const double va = e_aa[i] - ma * ma;
      const double vb = e_bb[i] - mb * mb;
      const double cov = e_ab[i] - ma * mb;
      sum += ((2.0 * ma * mb + kSsimC1) * (2.0 * cov + kSsimC2)) /
             ((ma * ma + mb * mb + kSsimC1) * (va + vb + kSsimC2));
    }
    total += sum / static_cast<double>(mu_a.size());
  }
  return total / static_cast<double>(ch);
}

ImageBuffer diff_first(const ImageBuffer& a1, const ImageBuffer& a2) {
  require_same_shape(a1, a2, "diff_first");
  ImageBuffer out = a1;
  auto o = out.samples();
  const auto s = a2.samples();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = std::abs(o[i] - s[i]);
  return out;
}

ImageBuffer diff_second_logical(const ImageBuffer& aa1, const ImageBuffer& aa2) {
  require_same_shape(aa1, aa2, "diff_second_logical");
  ImageBuffer out = aa1;
  auto o = out.samples();
  const auto s = aa2.samples();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = o[i] > s[i] ? o[i] - s[i] : 0.0;
  return out;
}

double increment(double closed, double open) {
  if (std::isinf(closed) && std::isinf(open) && (closed > 0) == (open > 0)) return 0.0;
  return closed - open;
}

Aggregate aggregate(std::span<const MetricRow> rows) {
  if (rows.empty()) throw std::invalid_argument("aggregate: no rows");
  Aggregate agg;
  agg.scale = rows.front().scale;
  agg.count = rows.size();
  agg.dpsnr_m = -std::numeric_limits<double>::infinity();
  agg.dssim_m = -std::numeric_limits<double>::infinity();
  for (const auto& r : rows) {
    agg.psnr_o += r.psnr_o;
    agg.psnr_c += r.psnr_c;
    agg.ssim_o += r.ssim_o;
    agg.ssim_c += r.ssim_c;
    agg.dpsnr_m = std::max(agg.dpsnr_m, r.dpsnr());
    agg.dssim_m = std::max(agg.dssim_m, r.dssim());
  }
  const auto z = static_cast<double>(rows.size());
  agg.psnr_o /= z;
  agg.psnr_c /= z;
  agg.ssim_o /= z;
  agg.ssim_c /= z;
  agg.dpsnr_a = increment(agg.psnr_c, agg.psnr_o);
  agg.dssim_a = increment(agg.ssim_c, agg.ssim_o);
  return agg;
}

}  // namespace casisr
