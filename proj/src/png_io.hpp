#pragma once

#include <string>
#include <vector>

#include "casisr/image.hpp"

namespace casisr::detail {

bool looks_like_png(const std::vector<unsigned char>& bytes);
ImageBuffer decode_png(const std::vector<unsigned char>& bytes, const std::string& name);
void encode_png(const ImageBuffer& img, const std::string& path, int bit_depth);

}  // namespace casisr::detail
