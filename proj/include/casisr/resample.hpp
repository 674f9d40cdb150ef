#pragma once

#include <cstddef>
#include <string>

#include "casisr/image.hpp"

namespace casisr {

enum class KernelKind { nearest, bilinear, bicubic, lanczos3 };

KernelKind parse_kernel(const std::string& name);
const char* kernel_name(KernelKind kind);

/// Separable resampling with pixel-center alignment, src = (dst + 0.5) * in/out - 0.5.
///
/// Boundaries replicate the edge pixel. On a downscaled axis the kernel support is
/// widened by in/out. Weights are normalized per output sample and no clamping is
/// applied, so the operator is linear and preserves constants exactly up to rounding.
ImageBuffer resize(const ImageBuffer& img, std::size_t out_h, std::size_t out_w, KernelKind kernel);

/// The degradation operator used by the feedback loop and for LR generation:
/// anti-aliased bicubic (Keys, a = -0.5) resize to (lr_h, lr_w).
ImageBuffer degrade(const ImageBuffer& sr, std::size_t lr_h, std::size_t lr_w);

/// Continuous kernel value at offset x (in source-pixel units, unscaled).
double kernel_weight(KernelKind kind, double x);
double kernel_support(KernelKind kind);

}  // namespace casisr
