#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "p2ps/imaging/image.hpp"

namespace p2ps::imaging {

/// Decodes a PNG byte buffer to 8-bit grayscale. Color inputs collapse to
/// luminance (BT.601: 0.299 R + 0.587 G + 0.114 B, rounded); palette,
/// sub-8-bit, and 16-bit inputs convert. Throws DataError on malformed data.
Image2D decode_png(const std::vector<std::uint8_t>& bytes);

/// Encodes 8-bit grayscale PNG bytes; decode(encode(img)) == img.
std::vector<std::uint8_t> encode_png(const Image2D& img);

/// File conveniences; throw IoError on filesystem failures and DataError on
/// malformed image content.
Image2D load_png(const std::string& path);
void save_png(const Image2D& img, const std::string& path);

}  // namespace p2ps::imaging
