#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace p2ps::nn {

/// Rank-4 numeric array in (batch, height, width, channels) order,
/// row-major with channels contiguous. The single value/gradient carrier
/// for every layer in the network.
template <typename T>
struct TensorT {
    std::array<int, 4> shape{1, 1, 1, 1};  // b, h, w, c
    std::vector<T> data;

    TensorT() = default;

    TensorT(int b, int h, int w, int c) : shape{b, h, w, c} {
        check_extents();
        data.assign(static_cast<std::size_t>(b) * h * w * c, T(0));
    }

    explicit TensorT(const std::array<int, 4>& s) : TensorT(s[0], s[1], s[2], s[3]) {}

    int batch() const { return shape[0]; }
    int height() const { return shape[1]; }
    int width() const { return shape[2]; }
    int channels() const { return shape[3]; }

    std::size_t size() const { return data.size(); }

    std::size_t index(int b, int y, int x, int c) const {
        return ((static_cast<std::size_t>(b) * shape[1] + y) * shape[2] + x) * shape[3] + c;
    }

    T& at(int b, int y, int x, int c) { return data[index(b, y, x, c)]; }
    const T& at(int b, int y, int x, int c) const { return data[index(b, y, x, c)]; }

    void fill(T v) { data.assign(data.size(), v); }

    bool same_shape(const TensorT& other) const { return shape == other.shape; }

    std::string shape_str() const {
        std::ostringstream os;
        os << "(" << shape[0] << ", " << shape[1] << ", " << shape[2] << ", " << shape[3] << ")";
        return os.str();
    }

    template <typename U>
    TensorT<U> cast() const {
        TensorT<U> out(shape[0], shape[1], shape[2], shape[3]);
        for (std::size_t i = 0; i < data.size(); ++i) out.data[i] = static_cast<U>(data[i]);
        return out;
    }

private:
    void check_extents() const {
        for (int e : shape) {
            if (e < 1) throw std::invalid_argument("tensor extents must be >= 1, got " + shape_note());
        }
    }
    std::string shape_note() const {
        return std::to_string(shape[0]) + "x" + std::to_string(shape[1]) + "x" +
               std::to_string(shape[2]) + "x" + std::to_string(shape[3]);
    }
};

using Tensor = TensorT<float>;

/// Concatenates along the channel axis. Batch and spatial extents must match.
template <typename T>
TensorT<T> concat_channels(const TensorT<T>& a, const TensorT<T>& b) {
    if (a.shape[0] != b.shape[0] || a.shape[1] != b.shape[1] || a.shape[2] != b.shape[2]) {
        throw std::invalid_argument("concat_channels: extent mismatch " + a.shape_str() + " vs " +
                                    b.shape_str());
    }
    TensorT<T> out(a.shape[0], a.shape[1], a.shape[2], a.shape[3] + b.shape[3]);
    const int ca = a.shape[3], cb = b.shape[3];
    const std::size_t pixels = static_cast<std::size_t>(a.shape[0]) * a.shape[1] * a.shape[2];
    for (std::size_t p = 0; p < pixels; ++p) {
        T* dst = out.data.data() + p * (ca + cb);
        const T* sa = a.data.data() + p * ca;
        const T* sb = b.data.data() + p * cb;
        for (int c = 0; c < ca; ++c) dst[c] = sa[c];
        for (int c = 0; c < cb; ++c) dst[ca + c] = sb[c];
    }
    return out;
}

/// Inverse of concat_channels: splits off the first `ca` channels.
template <typename T>
std::pair<TensorT<T>, TensorT<T>> split_channels(const TensorT<T>& t, int ca) {
    if (ca < 1 || ca >= t.shape[3]) throw std::invalid_argument("split_channels: bad split point");
    const int cb = t.shape[3] - ca;
    TensorT<T> a(t.shape[0], t.shape[1], t.shape[2], ca);
    TensorT<T> b(t.shape[0], t.shape[1], t.shape[2], cb);
    const std::size_t pixels = static_cast<std::size_t>(t.shape[0]) * t.shape[1] * t.shape[2];
    for (std::size_t p = 0; p < pixels; ++p) {
        const T* src = t.data.data() + p * (ca + cb);
        T* da = a.data.data() + p * ca;
        T* db = b.data.data() + p * cb;
        for (int c = 0; c < ca; ++c) da[c] = src[c];
        for (int c = 0; c < cb; ++c) db[c] = src[ca + c];
    }
    return {std::move(a), std::move(b)};
}

template <typename T>
void add_inplace(TensorT<T>& a, const TensorT<T>& b) {
    if (!a.same_shape(b)) throw std::invalid_argument("add_inplace: shape mismatch");
    for (std::size_t i = 0; i < a.data.size(); ++i) a.data[i] += b.data[i];
}

template <typename T>
double dot(const TensorT<T>& a, const TensorT<T>& b) {
    if (!a.same_shape(b)) throw std::invalid_argument("dot: shape mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) s += double(a.data[i]) * double(b.data[i]);
    return s;
}

}  // namespace p2ps::nn
