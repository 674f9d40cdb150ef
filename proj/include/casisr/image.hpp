#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace casisr {

/// Raised for unreadable or malformed image files and for buffer-shape violations.
class ImageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// H x W x C raster of real intensities, row-major with interleaved channels.
///
/// Harness-produced images live in [0,1]; error and pre-position buffers inside
/// the feedback loop may leave that range, so the type itself only requires
/// finite samples and a consistent shape.
class ImageBuffer {
 public:
  ImageBuffer() = default;
  ImageBuffer(std::size_t height, std::size_t width, std::size_t channels, double fill = 0.0);
  ImageBuffer(std::size_t height, std::size_t width, std::size_t channels, std::vector<double> samples);

  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }
  std::size_t channels() const { return channels_; }
  /// Length of the flattened vector (d or D).
  std::size_t size() const { return samples_.size(); }
  bool empty() const { return samples_.empty(); }

  double& at(std::size_t y, std::size_t x, std::size_t c) {
    return samples_[(y * width_ + x) * channels_ + c];
  }
  double at(std::size_t y, std::size_t x, std::size_t c) const {
    return samples_[(y * width_ + x) * channels_ + c];
  }

  std::span<double> samples() { return samples_; }
  std::span<const double> samples() const { return samples_; }

  bool same_shape(const ImageBuffer& other) const {
    return height_ == other.height_ && width_ == other.width_ && channels_ == other.channels_;
  }

  friend bool operator==(const ImageBuffer&, const ImageBuffer&) = default;

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::size_t channels_ = 0;
  std::vector<double> samples_;
};

/// Requested upscaling: the real-valued factor is advisory, the target dims are authoritative.
struct ScaleSpec {
  double factor = 1.0;
  std::size_t target_height = 0;
  std::size_t target_width = 0;
};

enum class ImageFormat { png8, png16, csr1 };

/// Reads PNG (8/16-bit, gray or RGB) or CSR1. The format is sniffed from the magic bytes.
ImageBuffer read_image(const std::filesystem::path& path);

/// PNG formats clamp to [0,1] and quantize round-half-up; CSR1 stores binary32 samples.
void write_image(const ImageBuffer& img, const std::filesystem::path& path, ImageFormat format);

ImageFormat parse_image_format(const std::string& name);

/// Euclidean norm of the flattened sample vector.
double flatten_norm(const ImageBuffer& img);

// Elementwise helpers used throughout the loop and harness.
ImageBuffer clamp_unit(const ImageBuffer& img);
ImageBuffer subtract(const ImageBuffer& a, const ImageBuffer& b);
/// a + scale * b
ImageBuffer axpy(const ImageBuffer& a, double scale, const ImageBuffer& b);
void require_same_shape(const ImageBuffer& a, const ImageBuffer& b, const char* what);

}  // namespace casisr
