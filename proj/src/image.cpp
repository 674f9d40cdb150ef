#include "casisr/image.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>

#include "png_io.hpp"

namespace casisr {

namespace {

constexpr char kCsrMagic[4] = {'C', 'S', 'R', '1'};

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xFFu));
}

std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::vector<unsigned char> slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ImageError("cannot open image file: " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

ImageBuffer decode_csr1(const std::vector<unsigned char>& bytes, const std::filesystem::path& path) {
  if (bytes.size() < 16) throw ImageError("CSR1 header truncated: " + path.string());
  const std::uint32_t h = get_u32(bytes.data() + 4);
  const std::uint32_t w = get_u32(bytes.data() + 8);
  const std::uint32_t c = get_u32(bytes.data() + 12);
  if (h == 0 || w == 0 || (c != 1 && c != 3)) {
    throw ImageError("CSR1 header has invalid dimensions: " + path.string());
  }
  const std::uint64_t count = std::uint64_t{h} * w * c;
  if (bytes.size() != 16 + count * 4) {
    throw ImageError("CSR1 payload size does not match header: " + path.string());
  }
  std::vector<double> samples(count);
  const unsigned char* p = bytes.data() + 16;
  for (std::uint64_t i = 0; i < count; ++i, p += 4) {
    samples[i] = static_cast<double>(std::bit_cast<float>(get_u32(p)));
  }
  return ImageBuffer(h, w, c, std::move(samples));
}

void encode_csr1(const ImageBuffer& img, const std::filesystem::path& path) {
  std::vector<unsigned char> out;
  out.reserve(16 + img.size() * 4);
  out.insert(out.end(), std::begin(kCsrMagic), std::end(kCsrMagic));
  put_u32(out, static_cast<std::uint32_t>(img.height()));
  put_u32(out, static_cast<std::uint32_t>(img.width()));
  put_u32(out, static_cast<std::uint32_t>(img.channels()));
  for (double v : img.samples()) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw ImageError("cannot open for writing: " + path.string());
  os.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
  if (!os) throw ImageError("write failed: " + path.string());
}

}  // namespace

ImageBuffer::ImageBuffer(std::size_t height, std::size_t width, std::size_t channels, double fill)
    : height_(height), width_(width), channels_(channels), samples_(height * width * channels, fill) {}

ImageBuffer::ImageBuffer(std::size_t height, std::size_t width, std::size_t channels,
                         std::vector<double> samples)
    : height_(height), width_(width), channels_(channels), samples_(std::move(samples)) {
  if (samples_.size() != height * width * channels) {
    throw ImageError("sample count does not match height x width x channels");
  }
}

ImageBuffer read_image(const std::filesystem::path& path) {
  const auto bytes = slurp(path);
  if (bytes.size() >= 4 && std::memcmp(bytes.data(), kCsrMagic, 4) == 0) return decode_csr1(bytes, path);
  if (detail::looks_like_png(bytes)) return detail::decode_png(bytes, path.string());
  throw ImageError("unrecognized image format (expected PNG or CSR1): " + path.string());
}

void write_image(const ImageBuffer& img, const std::filesystem::path& path, ImageFormat format) {
  if (img.channels() != 1 && img.channels() != 3) {
    throw ImageError("only 1- or 3-channel images can be written");
  }
  for (double v : img.samples()) {
    if (!std::isfinite(v)) throw ImageError("refusing to write non-finite samples: " + path.string());
  }
  switch (format) {
    case ImageFormat::csr1:
      encode_csr1(img, path);
      break;
    case ImageFormat::png8:
      detail::encode_png(img, path.string(), 8);
      break;
    case ImageFormat::png16:
      detail::encode_png(img, path.string(), 16);
      break;
  }
}

ImageFormat parse_image_format(const std::string& name) {
  if (name == "png8" || name == "png") return ImageFormat::png8;
  if (name == "png16") return ImageFormat::png16;
  if (name == "csr1") return ImageFormat::csr1;
  throw ImageError("unknown image format: " + name);
}

double flatten_norm(const ImageBuffer& img) {
  // Scaled accumulation avoids overflow for large-magnitude error buffers.
  double scale = 0.0;
  for (double v : img.samples()) scale = std::max(scale, std::abs(v));
  if (scale == 0.0) return 0.0;
  double sum = 0.0;
  for (double v : img.samples()) {
    const double r = v / scale;
    sum += r * r;
  }
  return scale * std::sqrt(sum);
}

void require_same_shape(const ImageBuffer& a, const ImageBuffer& b, const char* what) {
  if (!a.same_shape(b)) {
    throw ImageError(std::string(what) + ": dimension mismatch (" + std::to_string(a.height()) + "x" +
                     std::to_string(a.width()) + "x" + std::to_string(a.channels()) + " vs " +
                     std::to_string(b.height()) + "x" + std::to_string(b.width()) + "x" +
                     std::to_string(b.channels()) + ")");
  }
}

ImageBuffer clamp_unit(const ImageBuffer& img) {
  ImageBuffer out = img;
  for (double& v : out.samples()) v = std::clamp(v, 0.0, 1.0);
  return out;
}

ImageBuffer subtract(const ImageBuffer& a, const ImageBuffer& b) {
  require_same_shape(a, b, "subtract");
  ImageBuffer out = a;
  auto o = out.samples();
  auto s = b.samples();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] -= s[i];
  return out;
}

ImageBuffer axpy(const ImageBuffer& a, double scale, const ImageBuffer& b) {
  require_same_shape(a, b, "axpy");
  ImageBuffer out = a;
  auto o = out.samples();
  auto s = b.samples();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] += scale * s[i];
  return out;
}

}  // namespace casisr
