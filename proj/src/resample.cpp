#include "casisr/resample.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

namespace casisr {

namespace {

constexpr double kKeysA = -0.5;

double keys_cubic(double x) {
  const double t = std::abs(x);
  if (t <= 1.0) return ((kKeysA + 2.0) * t - (kKeysA + 3.0)) * t * t + 1.0;
  if (t < 2.0) return ((kKeysA * t - 5.0 * kKeysA) * t + 8.0 * kKeysA) * t - 4.0 * kKeysA;
  return 0.0;
}

double sinc(double x) {
  if (x == 0.0) return 1.0;
  const double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

double lanczos3(double x) {
  const double t = std::abs(x);
  if (t >= 3.0) return 0.0;
  if (t == 0.0) return 1.0;
  // sin(pi * k) is not exactly zero in floating point; keep the identity resize exact.
  if (t == std::floor(t)) return 0.0;
  return sinc(t) * sinc(t / 3.0);
}

struct AxisWeights {
  std::vector<std::size_t> offsets;  // start index into taps for each output position
  std::vector<std::size_t> index;
  std::vector<double> weight;
};

AxisWeights build_axis(std::size_t in, std::size_t out, KernelKind kind) {
  AxisWeights aw;
  aw.offsets.reserve(out + 1);
  const double ratio = static_cast<double>(in) / static_cast<double>(out);
  const double stretch = std::max(1.0, ratio);
  const double support = kernel_support(kind) * stretch;
  const auto last = static_cast<long>(in) - 1;

  std::vector<double> scratch;
  std::vector<long> taps;
  for (std::size_t o = 0; o < out; ++o) {
    aw.offsets.push_back(aw.index.size());
    const double center = ((static_cast<double>(o) + 0.5) * static_cast<double>(in)) / static_cast<double>(out) - 0.5;
    const long lo = static_cast<long>(std::floor(center - support));
    const long hi = static_cast<long>(std::ceil(center + support));
    scratch.clear();
    taps.clear();
    double sum = 0.0;
    for (long j = lo; j <= hi; ++j) {
      const double w = kernel_weight(kind, (static_cast<double>(j) - center) / stretch);
      if (w == 0.0) continue;
      taps.push_back(std::clamp(j, 0L, last));
      scratch.push_back(w);
      sum += w;
    }
    // Merge taps that replicate onto the same edge pixel.
    const std::size_t begin = aw.index.size();
    for (std::size_t t = 0; t < taps.size(); ++t) {
      const auto idx = static_cast<std::size_t>(taps[t]);
      if (aw.index.size() > begin && aw.index.back() == idx) {
        aw.weight.back() += scratch[t];
      } else {
        aw.index.push_back(idx);
        aw.weight.push_back(scratch[t]);
      }
    }
    for (std::size_t t = begin; t < aw.weight.size(); ++t) aw.weight[t] /= sum;
  }
  aw.offsets.push_back(aw.index.size());
  return aw;
}

}  // namespace

KernelKind parse_kernel(const std::string& name) {
  if (name == "nearest") return KernelKind::nearest;
  if (name == "bilinear") return KernelKind::bilinear;
  if (name == "bicubic") return KernelKind::bicubic;
  if (name == "lanczos" || name == "lanczos3") return KernelKind::lanczos3;
  throw std::invalid_argument("unknown kernel: " + name);
}

const char* kernel_name(KernelKind kind) {
  switch (kind) {
    case KernelKind::nearest: return "nearest";
    case KernelKind::bilinear: return "bilinear";
    case KernelKind::bicubic: return "bicubic";
    case KernelKind::lanczos3: return "lanczos3";
  }
  return "?";
}

double kernel_support(KernelKind kind) {
  switch (kind) {
    case KernelKind::nearest: return 0.5;
    case KernelKind::bilinear: return 1.0;
    case KernelKind::bicubic: return 2.0;
    case KernelKind::lanczos3: return 3.0;
  }
  return 0.0;
}

double kernel_weight(KernelKind kind, double x) {
  switch (kind) {
    // Half-open box (-0.5, 0.5]: ties resolve to the higher source index, i.e. floor(src + 0.5).
    case KernelKind::nearest: return (x > -0.5 && x <= 0.5) ? 1.0 : 0.0;
    case KernelKind::bilinear: return std::max(0.0, 1.0 - std::abs(x));
    case KernelKind::bicubic: return keys_cubic(x);
    case KernelKind::lanczos3: return lanczos3(x);
  }
  return 0.0;
}

ImageBuffer resize(const ImageBuffer& img, std::size_t out_h, std::size_t out_w, KernelKind kernel) {
  if (img.empty()) throw ImageError("resize: zero-sized input");
  if (out_h == 0 || out_w == 0) throw ImageError("resize: output dimensions must be >= 1");
  const std::size_t in_h = img.height(), in_w = img.width(), ch = img.channels();
  if (in_h == out_h && in_w == out_w) return img;

  const AxisWeights wx = build_axis(in_w, out_w, kernel);
  const AxisWeights wy = build_axis(in_h, out_h, kernel);

  // Horizontal pass: in_h x out_w.
  ImageBuffer tmp(in_h, out_w, ch);
  for (std::size_t y = 0; y < in_h; ++y) {
    for (std::size_t x = 0; x < out_w; ++x) {
      for (std::size_t c = 0; c < ch; ++c) {
        // Accumulate around the first tap so constant rows come out bit-exact.
        const double v0 = img.at(y, wx.index[wx.offsets[x]], c);
        double acc = 0.0;
        for (std::size_t t = wx.offsets[x]; t < wx.offsets[x + 1]; ++t)
          acc += wx.weight[t] * (img.at(y, wx.index[t], c) - v0);
        tmp.at(y, x, c) = v0 + acc;
      }
    }
  }
  // Vertical pass: out_h x out_w.
  ImageBuffer out(out_h, out_w, ch);
  for (std::size_t y = 0; y < out_h; ++y) {
    for (std::size_t x = 0; x < out_w; ++x) {
      for (std::size_t c = 0; c < ch; ++c) {
        const double v0 = tmp.at(wy.index[wy.offsets[y]], x, c);
        double acc = 0.0;
        for (std::size_t t = wy.offsets[y]; t < wy.offsets[y + 1]; ++t)
          acc += wy.weight[t] * (tmp.at(wy.index[t], x, c) - v0);
        out.at(y, x, c) = v0 + acc;
      }
    }
  }
  return out;
}

ImageBuffer degrade(const ImageBuffer& sr, std::size_t lr_h, std::size_t lr_w) {
  if (lr_h > sr.height() || lr_w > sr.width()) {
    throw ImageError("degrade: target dims exceed the input dims");
  }
  return resize(sr, lr_h, lr_w, KernelKind::bicubic);
}

}  // namespace casisr
