#include "p2ps/imaging/image.hpp"

#include <algorithm>
#include <cmath>

#include "p2ps/errors.hpp"

namespace p2ps::imaging {

Image2D::Image2D(int w, int h, std::uint8_t fill)
    : width(w), height(h), pixels(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill) {
    if (w <= 0 || h <= 0) throw DataError("image extents must be positive, got " +
                                          std::to_string(w) + "x" + std::to_string(h));
}

bool Image2D::is_binary() const {
    return std::all_of(pixels.begin(), pixels.end(),
                       [](std::uint8_t p) { return p == 0 || p == 255; });
}

nn::Tensor normalize(const Image2D& img) {
    nn::Tensor t(1, img.height, img.width, 1);
    for (std::size_t i = 0; i < img.pixels.size(); ++i) {
        t.data[i] = static_cast<float>(img.pixels[i] / 127.5 - 1.0);
    }
    return t;
}

namespace {

std::uint8_t to_byte(double v) {
    double scaled = (std::clamp(v, -1.0, 1.0) + 1.0) * 127.5;
    double rounded = std::floor(scaled + 0.5);  // round half away from zero (values are >= 0)
    return static_cast<std::uint8_t>(std::clamp(rounded, 0.0, 255.0));
}

void check_hw_tensor(const nn::Tensor& t, const char* what) {
    if (t.shape.size() != 4 || t.shape[0] != 1 || t.shape[3] != 1) {
        throw DataError(std::string(what) + " expects a (1, h, w, 1) tensor");
    }
}

}  // namespace

Image2D denormalize(const nn::Tensor& t) {
    check_hw_tensor(t, "denormalize");
    Image2D img(static_cast<int>(t.shape[2]), static_cast<int>(t.shape[1]));
    for (std::size_t i = 0; i < img.pixels.size(); ++i) img.pixels[i] = to_byte(t.data[i]);
    return img;
}

Image2D tensor_to_mask(const nn::Tensor& t) {
    check_hw_tensor(t, "tensor_to_mask");
    Image2D img(static_cast<int>(t.shape[2]), static_cast<int>(t.shape[1]));
    for (std::size_t i = 0; i < img.pixels.size(); ++i) img.pixels[i] = t.data[i] > 0.0f ? 255 : 0;
    return img;
}

Image2D tensor_to_gray(const nn::Tensor& t) { return denormalize(t); }

std::array<long long, 256> histogram(const Image2D& img) {
    std::array<long long, 256> h{};
    for (std::uint8_t p : img.pixels) ++h[p];
    return h;
}

Image2D diff_image(const Image2D& a, const Image2D& b) {
    if (!a.same_extents(b)) throw DataError("diff_image extents mismatch");
    Image2D out(a.width, a.height);
    for (std::size_t i = 0; i < out.pixels.size(); ++i) {
        int d = static_cast<int>(a.pixels[i]) - static_cast<int>(b.pixels[i]);
        out.pixels[i] = static_cast<std::uint8_t>(d < 0 ? -d : d);
    }
    return out;
}

Image2D binarize(const Image2D& img) {
    Image2D out(img.width, img.height);
    for (std::size_t i = 0; i < out.pixels.size(); ++i) {
        out.pixels[i] = img.pixels[i] >= 128 ? 255 : 0;
    }
    return out;
}

Image2D union_masks(const Image2D& a, const Image2D& b) {
    if (!a.same_extents(b)) throw DataError("union_masks extents mismatch");
    Image2D out(a.width, a.height);
    for (std::size_t i = 0; i < out.pixels.size(); ++i) {
        out.pixels[i] = std::max(a.pixels[i], b.pixels[i]);
    }
    return out;
}

}  // namespace p2ps::imaging
