#include "png_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <memory>

namespace casisr::detail {

namespace {

struct MemoryReader {
  const unsigned char* data;
  std::size_t size;
  std::size_t offset;
};

void read_from_memory(png_structp png, png_bytep out, png_size_t count) {
  auto* src = static_cast<MemoryReader*>(png_get_io_ptr(png));
  if (src->offset + count > src->size) png_error(png, "truncated PNG stream");
  std::memcpy(out, src->data + src->offset, count);
  src->offset += count;
}

// libpng reports errors through longjmp; keep the message so it can be rethrown as ImageError.
struct ErrorSlot {
  char message[256] = {};
};

void on_png_error(png_structp png, png_const_charp msg) {
  auto* slot = static_cast<ErrorSlot*>(png_get_error_ptr(png));
  if (slot) std::snprintf(slot->message, sizeof(slot->message), "%s", msg);
  png_longjmp(png, 1);
}

void on_png_warning(png_structp, png_const_charp) {}

// Round-half-up after clamping to [0,1].
unsigned quantize(double v, unsigned max_code) {
  const double c = std::clamp(v, 0.0, 1.0);
  return static_cast<unsigned>(std::floor(c * max_code + 0.5));
}

}  // namespace

bool looks_like_png(const std::vector<unsigned char>& bytes) {
  return bytes.size() >= 8 && png_sig_cmp(bytes.data(), 0, 8) == 0;
}

ImageBuffer decode_png(const std::vector<unsigned char>& bytes, const std::string& name) {
  ErrorSlot slot;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &slot, on_png_error, on_png_warning);
  if (!png) throw ImageError("libpng init failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw ImageError("libpng init failed");
  }

  MemoryReader reader{bytes.data(), bytes.size(), 0};
  png_uint_32 width = 0, height = 0;
  int bit_depth = 0, color_type = 0;
  std::vector<unsigned char> raw;
  std::size_t rowbytes = 0;
  std::string failure;
  std::vector<png_bytep> rows;

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw ImageError("PNG decode failed for " + name + ": " + slot.message);
  }
  png_set_read_fn(png, &reader, read_from_memory);
  png_read_info(png, info);
  png_get_IHDR(png, info, &width, &height, &bit_depth, &color_type, nullptr, nullptr, nullptr);

  std::size_t channels = 0;
  if (color_type == PNG_COLOR_TYPE_GRAY) channels = 1;
  if (color_type == PNG_COLOR_TYPE_RGB) channels = 3;
  if (channels == 0) {
    failure = "unsupported PNG color type (only gray or RGB without alpha)";
  } else if (bit_depth != 8 && bit_depth != 16) {
    failure = "unsupported PNG bit depth " + std::to_string(bit_depth);
  }
  if (!failure.empty()) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw ImageError(failure + ": " + name);
  }

  rowbytes = png_get_rowbytes(png, info);
  raw.resize(rowbytes * height);
  rows.resize(height);
  for (png_uint_32 y = 0; y < height; ++y) rows[y] = raw.data() + y * rowbytes;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  ImageBuffer img(height, width, channels);
  auto out = img.samples();
  if (bit_depth == 8) {
    for (std::size_t y = 0; y < height; ++y) {
      const unsigned char* row = raw.data() + y * rowbytes;
      for (std::size_t i = 0; i < width * channels; ++i) out[y * width * channels + i] = row[i] / 255.0;
    }
  } else {
    for (std::size_t y = 0; y < height; ++y) {
      const unsigned char* row = raw.data() + y * rowbytes;
      for (std::size_t i = 0; i < width * channels; ++i) {
        const unsigned v = (static_cast<unsigned>(row[2 * i]) << 8) | row[2 * i + 1];
        out[y * width * channels + i] = v / 65535.0;
      }
    }
  }
  return img;
}

void encode_png(const ImageBuffer& img, const std::string& path, int bit_depth) {
  const std::size_t h = img.height(), w = img.width(), c = img.channels();
  const std::size_t bytes_per = bit_depth == 16 ? 2 : 1;
  std::vector<unsigned char> raw(h * w * c * bytes_per);
  auto in = img.samples();
  for (std::size_t i = 0; i < in.size(); ++i) {
    if (bit_depth == 16) {
      const unsigned v = quantize(in[i], 65535);
      raw[2 * i] = static_cast<unsigned char>(v >> 8);
      raw[2 * i + 1] = static_cast<unsigned char>(v & 0xFF);
    } else {
      raw[i] = static_cast<unsigned char>(quantize(in[i], 255));
    }
  }

  std::unique_ptr<FILE, int (*)(FILE*)> fp(std::fopen(path.c_str(), "wb"), &std::fclose);
  if (!fp) throw ImageError("cannot open for writing: " + path);

  ErrorSlot slot;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &slot, on_png_error, on_png_warning);
  if (!png) throw ImageError("libpng init failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw ImageError("libpng init failed");
  }
  std::vector<png_bytep> rows(h);
  for (std::size_t y = 0; y < h; ++y) rows[y] = raw.data() + y * w * c * bytes_per;

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw ImageError("PNG encode failed for " + path + ": " + slot.message);
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(w), static_cast<png_uint_32>(h), bit_depth,
               c == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace casisr::detail
