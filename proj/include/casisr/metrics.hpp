#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "casisr/image.hpp"

namespace casisr {

struct MetricOptions {
  /// Compare BT.601 luma instead of full RGB (3-channel inputs only).
  bool y_channel = false;
};

/// 10 log10(1 / MSE) with data range 1 after clamping both inputs to [0,1].
/// Identical inputs give +infinity.
double psnr(const ImageBuffer& x, const ImageBuffer& ref, const MetricOptions& opts = {});

/// Single-scale SSIM: 11x11 Gaussian window (sigma 1.5), K1 = 0.01, K2 = 0.03, L = 1,
/// evaluated only where the window fits, averaged over the map and then over channels.
double ssim(const ImageBuffer& x, const ImageBuffer& ref, const MetricOptions& opts = {});

constexpr std::size_t kSsimWindow = 11;
constexpr double kSsimSigma = 1.5;
constexpr double kSsimC1 = 0.01 * 0.01;
constexpr double kSsimC2 = 0.03 * 0.03;

/// Normalized 1-D Gaussian taps; the 2-D window is their outer product.
std::vector<double> ssim_gaussian_taps();

ImageBuffer to_luma(const ImageBuffer& rgb);

/// |a1 - a2| elementwise.
ImageBuffer diff_first(const ImageBuffer& a1, const ImageBuffer& a2);

/// Positive part of aa1 - aa2: where aa1 errs more than aa2.
ImageBuffer diff_second_logical(const ImageBuffer& aa1, const ImageBuffer& aa2);

/// c - o, with inf - inf taken as 0.
double increment(double closed, double open);

struct MetricRow {
  std::string image_id;
  double scale = 0.0;
  double psnr_o = 0.0;
  double psnr_c = 0.0;
  double ssim_o = 0.0;
  double ssim_c = 0.0;

  double dpsnr() const { return increment(psnr_c, psnr_o); }
  double dssim() const { return increment(ssim_c, ssim_o); }
};

/// Per-scale summary over Z image rows: means of each column, the mean increment
/// (closed mean minus open mean) and the largest single-row increment.
struct Aggregate {
  double scale = 0.0;
  std::size_t count = 0;
  double psnr_o = 0.0;
  double psnr_c = 0.0;
  double dpsnr_a = 0.0;
  double dpsnr_m = 0.0;
  double ssim_o = 0.0;
  double ssim_c = 0.0;
  double dssim_a = 0.0;
  double dssim_m = 0.0;
};

Aggregate aggregate(std::span<const MetricRow> rows);

}  // namespace casisr
