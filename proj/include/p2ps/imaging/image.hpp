#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "p2ps/nn/tensor.hpp"

namespace p2ps::imaging {

/// 8-bit grayscale raster, row-major. The interchange type for everything
/// that touches files; tensors exist only between normalize/denormalize.
struct Image2D {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;

    Image2D() = default;
    Image2D(int w, int h, std::uint8_t fill = 0);

    std::uint8_t& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
    const std::uint8_t& at(int x, int y) const {
        return pixels[static_cast<std::size_t>(y) * width + x];
    }

    std::size_t size() const { return pixels.size(); }
    bool same_extents(const Image2D& o) const { return width == o.width && height == o.height; }

    /// True when every pixel is 0 or 255.
    bool is_binary() const;
};

/// p -> p/127.5 - 1, exactly -1/+1 at 0/255. Output (1, h, w, 1).
nn::Tensor normalize(const Image2D& img);

/// Clamps to [-1, 1], then inverts normalize with round-half-away rounding.
Image2D denormalize(const nn::Tensor& t);

/// raw > 0 -> 255, else 0 (for tanh outputs and {0,1} mask tensors).
Image2D tensor_to_mask(const nn::Tensor& t);

/// Maps a tanh-range tensor linearly onto [0, 255] for visualization.
Image2D tensor_to_gray(const nn::Tensor& t);

std::array<long long, 256> histogram(const Image2D& img);

/// Per-pixel absolute difference; extents must match.
Image2D diff_image(const Image2D& a, const Image2D& b);

/// Forces values to exactly {0, 255} with a >= 128 threshold.
Image2D binarize(const Image2D& img);

/// Pixelwise maximum (mask union); extents must match.
Image2D union_masks(const Image2D& a, const Image2D& b);

}  // namespace p2ps::imaging
