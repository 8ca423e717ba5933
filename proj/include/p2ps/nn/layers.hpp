#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "p2ps/nn/conv_kernels.hpp"
#include "p2ps/nn/rng.hpp"
#include "p2ps/nn/tensor.hpp"

namespace p2ps::nn {

enum class Mode { train, eval };

/// A learnable (or tracked) tensor plus its gradient buffer.
template <typename T>
struct ParamT {
    TensorT<T> value;
    TensorT<T> grad;
    bool trainable = true;

    ParamT() = default;
    explicit ParamT(const std::array<int, 4>& shape) : value(shape), grad(shape) {}

    void zero_grad() { grad.fill(T(0)); }
    std::size_t size() const { return value.size(); }
};

using Param = ParamT<float>;

// ---------------------------------------------------------------------------
// Conv2d
// ---------------------------------------------------------------------------

/// Strided 2D convolution, weight layout (kh, kw, cin, cout).
/// forward() caches its input; backward() consumes the cache, accumulates
/// parameter gradients and returns the input gradient.
template <typename T>
class Conv2dT {
public:
    Conv2dT(int kh, int kw, int cin, int cout, int stride, Padding padding, bool use_bias)
        : weight(std::array<int, 4>{kh, kw, cin, cout}), stride_(stride), padding_(padding) {
        if (use_bias) bias.emplace(std::array<int, 4>{1, 1, 1, cout});
    }

    void init(Pcg32& rng, double stddev = 0.02) {
        for (auto& v : weight.value.data) v = static_cast<T>(rng.normal(0.0, stddev));
        if (bias) bias->value.fill(T(0));
    }

    TensorT<T> forward(const TensorT<T>& x) {
        if (x.shape[3] != weight.value.shape[2]) {
            throw std::invalid_argument("conv2d: input has " + std::to_string(x.shape[3]) +
                                        " channels, weight expects " +
                                        std::to_string(weight.value.shape[2]));
        }
        geom_ = conv_geometry(x.shape[1], x.shape[2], weight.value.shape[0],
                              weight.value.shape[1], stride_, padding_);
        x_cache_ = x;
        TensorT<T> y(x.shape[0], geom_.out_h, geom_.out_w, weight.value.shape[3]);
        detail::conv2d_forward_kernel(x, weight.value, bias ? &bias->value : nullptr, geom_, y);
        return y;
    }

    TensorT<T> backward(const TensorT<T>& gy, bool accumulate_param_grads = true) {
        if (accumulate_param_grads) {
            detail::conv2d_backward_weights_kernel(x_cache_, gy, geom_, weight.grad,
                                                   bias ? &bias->grad : nullptr);
        }
        TensorT<T> gx(x_cache_.shape);
        detail::conv2d_backward_data_kernel(gy, weight.value, geom_, gx);
        return gx;
    }

    std::vector<ParamT<T>*> params() {
        std::vector<ParamT<T>*> p{&weight};
        if (bias) p.push_back(&*bias);
        return p;
    }

    long long param_count() const {
        long long n = static_cast<long long>(weight.value.size());
        if (bias) n += static_cast<long long>(bias->value.size());
        return n;
    }

    int stride() const { return stride_; }
    Padding padding() const { return padding_; }

    ParamT<T> weight;
    std::optional<ParamT<T>> bias;

private:
    int stride_;
    Padding padding_;
    TensorT<T> x_cache_;
    ConvGeom geom_{};
};

// ---------------------------------------------------------------------------
// ConvTranspose2d
// ---------------------------------------------------------------------------

/// Transposed convolution, weight layout (kh, kw, cout, cin): the exact
/// adjoint of a same-padded strided Conv2d sharing the same weight buffer.
/// Output spatial extents are stride times the input extents.
template <typename T>
class ConvTranspose2dT {
public:
    ConvTranspose2dT(int kh, int kw, int cin, int cout, int stride, bool use_bias)
        : weight(std::array<int, 4>{kh, kw, cout, cin}), stride_(stride) {
        if (use_bias) bias.emplace(std::array<int, 4>{1, 1, 1, cout});
    }

    void init(Pcg32& rng, double stddev = 0.02) {
        for (auto& v : weight.value.data) v = static_cast<T>(rng.normal(0.0, stddev));
        if (bias) bias->value.fill(T(0));
    }

    TensorT<T> forward(const TensorT<T>& x) {
        const int cin = weight.value.shape[3], cout = weight.value.shape[2];
        if (x.shape[3] != cin) {
            throw std::invalid_argument("conv2d_transpose: input has " +
                                        std::to_string(x.shape[3]) + " channels, weight expects " +
                                        std::to_string(cin));
        }
        // Geometry of the mirror conv mapping our output back to our input.
        const int out_h = x.shape[1] * stride_, out_w = x.shape[2] * stride_;
        geom_ = conv_geometry(out_h, out_w, weight.value.shape[0], weight.value.shape[1], stride_,
                              Padding::same);
        x_cache_ = x;
        TensorT<T> y(x.shape[0], out_h, out_w, cout);
        detail::conv2d_backward_data_kernel(x, weight.value, geom_, y);
        if (bias) {
            const T* bp = bias->value.data.data();
            const std::size_t pixels = static_cast<std::size_t>(y.shape[0]) * out_h * out_w;
            for (std::size_t p = 0; p < pixels; ++p) {
                T* yp = y.data.data() + p * cout;
                for (int oc = 0; oc < cout; ++oc) yp[oc] += bp[oc];
            }
        }
        return y;
    }

    TensorT<T> backward(const TensorT<T>& gy, bool accumulate_param_grads = true) {
        if (accumulate_param_grads) {
            detail::conv2d_backward_weights_kernel(gy, x_cache_, geom_, weight.grad,
                                                   static_cast<TensorT<T>*>(nullptr));
            if (bias) {
                const int cout = weight.value.shape[2];
                T* bp = bias->grad.data.data();
                const std::size_t pixels =
                    static_cast<std::size_t>(gy.shape[0]) * gy.shape[1] * gy.shape[2];
                for (std::size_t p = 0; p < pixels; ++p) {
                    const T* gp = gy.data.data() + p * cout;
                    for (int oc = 0; oc < cout; ++oc) bp[oc] += gp[oc];
                }
            }
        }
        TensorT<T> gx(x_cache_.shape[0], x_cache_.shape[1], x_cache_.shape[2],
                      weight.value.shape[3]);
        detail::conv2d_forward_kernel(gy, weight.value, static_cast<const TensorT<T>*>(nullptr),
                                      geom_, gx);
        return gx;
    }

    std::vector<ParamT<T>*> params() {
        std::vector<ParamT<T>*> p{&weight};
        if (bias) p.push_back(&*bias);
        return p;
    }

    long long param_count() const {
        long long n = static_cast<long long>(weight.value.size());
        if (bias) n += static_cast<long long>(bias->value.size());
        return n;
    }

    ParamT<T> weight;
    std::optional<ParamT<T>> bias;

private:
    int stride_;
    TensorT<T> x_cache_;
    ConvGeom geom_{};
};

// ---------------------------------------------------------------------------
// BatchNorm2d
// ---------------------------------------------------------------------------

/// Per-channel batch normalization over (batch, height, width). Train mode
/// uses batch statistics and updates the moving averages; eval mode uses
/// the moving statistics (initialized to mean 0 / var 1, so an untrained
/// eval pass is a gamma/beta affine map, not an error).
template <typename T>
class BatchNorm2dT {
public:
    explicit BatchNorm2dT(int channels, T momentum = T(0.99), T epsilon = T(1e-3))
        : gamma(std::array<int, 4>{1, 1, 1, channels}),
          beta(std::array<int, 4>{1, 1, 1, channels}),
          moving_mean(channels, T(0)),
          moving_var(channels, T(1)),
          momentum(momentum),
          epsilon(epsilon) {
        gamma.value.fill(T(1));
        beta.value.fill(T(0));
    }

    int channels() const { return gamma.value.shape[3]; }

    TensorT<T> forward(const TensorT<T>& x, Mode mode, bool update_stats = true) {
        const int C = channels();
        if (x.shape[3] != C) throw std::invalid_argument("batchnorm2d: channel mismatch");
        const std::size_t pixels = static_cast<std::size_t>(x.shape[0]) * x.shape[1] * x.shape[2];
        TensorT<T> y(x.shape);
        mode_cache_ = mode;

        std::vector<T> mean(C), inv_std(C);
        if (mode == Mode::train) {
            std::vector<double> sum(C, 0.0), sq(C, 0.0);
            for (std::size_t p = 0; p < pixels; ++p) {
                const T* xp = x.data.data() + p * C;
                for (int c = 0; c < C; ++c) {
                    sum[c] += xp[c];
                    sq[c] += double(xp[c]) * double(xp[c]);
                }
            }
            const double n = static_cast<double>(pixels);
            for (int c = 0; c < C; ++c) {
                const double m = sum[c] / n;
                double var = sq[c] / n - m * m;
                if (var < 0) var = 0;  // rounding guard
                mean[c] = static_cast<T>(m);
                inv_std[c] = static_cast<T>(1.0 / std::sqrt(var + double(epsilon)));
                if (update_stats) {
                    moving_mean[c] = momentum * moving_mean[c] + (T(1) - momentum) * static_cast<T>(m);
                    moving_var[c] = momentum * moving_var[c] + (T(1) - momentum) * static_cast<T>(var);
                }
            }
        } else {
            for (int c = 0; c < C; ++c) {
                mean[c] = moving_mean[c];
                inv_std[c] = static_cast<T>(1.0 / std::sqrt(double(moving_var[c]) + double(epsilon)));
            }
        }

        xhat_cache_ = TensorT<T>(x.shape);
        inv_std_cache_ = inv_std;
        const T* g = gamma.value.data.data();
        const T* bt = beta.value.data.data();
        for (std::size_t p = 0; p < pixels; ++p) {
            const T* xp = x.data.data() + p * C;
            T* hp = xhat_cache_.data.data() + p * C;
            T* yp = y.data.data() + p * C;
            for (int c = 0; c < C; ++c) {
                const T h = (xp[c] - mean[c]) * inv_std[c];
                hp[c] = h;
                yp[c] = g[c] * h + bt[c];
            }
        }
        return y;
    }

    TensorT<T> backward(const TensorT<T>& gy, bool accumulate_param_grads = true) {
        const int C = channels();
        const std::size_t pixels =
            static_cast<std::size_t>(gy.shape[0]) * gy.shape[1] * gy.shape[2];
        const double n = static_cast<double>(pixels);

        std::vector<double> sum_gy(C, 0.0), sum_gy_xhat(C, 0.0);
        for (std::size_t p = 0; p < pixels; ++p) {
            const T* gp = gy.data.data() + p * C;
            const T* hp = xhat_cache_.data.data() + p * C;
            for (int c = 0; c < C; ++c) {
                sum_gy[c] += gp[c];
                sum_gy_xhat[c] += double(gp[c]) * double(hp[c]);
            }
        }
        if (accumulate_param_grads) {
            for (int c = 0; c < C; ++c) {
                gamma.grad.data[c] += static_cast<T>(sum_gy_xhat[c]);
                beta.grad.data[c] += static_cast<T>(sum_gy[c]);
            }
        }

        TensorT<T> gx(gy.shape);
        const T* g = gamma.value.data.data();
        if (mode_cache_ == Mode::train) {
            for (std::size_t p = 0; p < pixels; ++p) {
                const T* gp = gy.data.data() + p * C;
                const T* hp = xhat_cache_.data.data() + p * C;
                T* xp = gx.data.data() + p * C;
                for (int c = 0; c < C; ++c) {
                    const double t = double(gp[c]) - sum_gy[c] / n -
                                     double(hp[c]) * sum_gy_xhat[c] / n;
                    xp[c] = static_cast<T>(double(g[c]) * double(inv_std_cache_[c]) * t);
                }
            }
        } else {
            for (std::size_t p = 0; p < pixels; ++p) {
                const T* gp = gy.data.data() + p * C;
                T* xp = gx.data.data() + p * C;
                for (int c = 0; c < C; ++c) xp[c] = gp[c] * g[c] * inv_std_cache_[c];
            }
        }
        return gx;
    }

    std::vector<ParamT<T>*> params() {
        return {&gamma, &beta};
    }

    /// Counts gamma, beta, moving mean, and moving variance (framework-summary convention).
    long long param_count() const { return 4LL * channels(); }

    ParamT<T> gamma, beta;
    std::vector<T> moving_mean, moving_var;
    T momentum;
    T epsilon;

private:
    Mode mode_cache_ = Mode::train;
    TensorT<T> xhat_cache_;
    std::vector<T> inv_std_cache_;
};

// ---------------------------------------------------------------------------
// Activations
// ---------------------------------------------------------------------------

enum class Act { relu, leaky_relu, tanh_fn, sigmoid };

template <typename T>
class ActivationT {
public:
    explicit ActivationT(Act kind, T alpha = T(0.2)) : kind_(kind), alpha_(alpha) {}

    TensorT<T> forward(const TensorT<T>& x) {
        TensorT<T> y(x.shape);
        switch (kind_) {
            case Act::relu:
                for (std::size_t i = 0; i < x.size(); ++i) y.data[i] = x.data[i] > T(0) ? x.data[i] : T(0);
                cache_ = x;
                break;
            case Act::leaky_relu:
                for (std::size_t i = 0; i < x.size(); ++i)
                    y.data[i] = x.data[i] > T(0) ? x.data[i] : alpha_ * x.data[i];
                cache_ = x;
                break;
            case Act::tanh_fn:
                for (std::size_t i = 0; i < x.size(); ++i) y.data[i] = std::tanh(x.data[i]);
                cache_ = y;  // derivative from the output
                break;
            case Act::sigmoid:
                for (std::size_t i = 0; i < x.size(); ++i)
                    y.data[i] = T(1) / (T(1) + std::exp(-x.data[i]));
                cache_ = y;
                break;
        }
        return y;
    }

    TensorT<T> backward(const TensorT<T>& gy) {
        TensorT<T> gx(gy.shape);
        switch (kind_) {
            case Act::relu:
                for (std::size_t i = 0; i < gy.size(); ++i)
                    gx.data[i] = cache_.data[i] > T(0) ? gy.data[i] : T(0);
                break;
            case Act::leaky_relu:
                for (std::size_t i = 0; i < gy.size(); ++i)
                    gx.data[i] = cache_.data[i] > T(0) ? gy.data[i] : alpha_ * gy.data[i];
                break;
            case Act::tanh_fn:
                for (std::size_t i = 0; i < gy.size(); ++i)
                    gx.data[i] = gy.data[i] * (T(1) - cache_.data[i] * cache_.data[i]);
                break;
            case Act::sigmoid:
                for (std::size_t i = 0; i < gy.size(); ++i)
                    gx.data[i] = gy.data[i] * cache_.data[i] * (T(1) - cache_.data[i]);
                break;
        }
        return gx;
    }

    std::vector<ParamT<T>*> params() { return {}; }
    Act kind() const { return kind_; }

private:
    Act kind_;
    T alpha_;
    TensorT<T> cache_;
};

// ---------------------------------------------------------------------------
// ZeroPad2d
// ---------------------------------------------------------------------------

template <typename T>
class ZeroPad2dT {
public:
    explicit ZeroPad2dT(int pad = 1) : pad_(pad) {}

    TensorT<T> forward(const TensorT<T>& x) {
        TensorT<T> y(x.shape[0], x.shape[1] + 2 * pad_, x.shape[2] + 2 * pad_, x.shape[3]);
        for (int b = 0; b < x.shape[0]; ++b)
            for (int h = 0; h < x.shape[1]; ++h)
                for (int w = 0; w < x.shape[2]; ++w)
                    for (int c = 0; c < x.shape[3]; ++c)
                        y.at(b, h + pad_, w + pad_, c) = x.at(b, h, w, c);
        return y;
    }

    TensorT<T> backward(const TensorT<T>& gy) {
        TensorT<T> gx(gy.shape[0], gy.shape[1] - 2 * pad_, gy.shape[2] - 2 * pad_, gy.shape[3]);
        for (int b = 0; b < gx.shape[0]; ++b)
            for (int h = 0; h < gx.shape[1]; ++h)
                for (int w = 0; w < gx.shape[2]; ++w)
                    for (int c = 0; c < gx.shape[3]; ++c)
                        gx.at(b, h, w, c) = gy.at(b, h + pad_, w + pad_, c);
        return gx;
    }

    std::vector<ParamT<T>*> params() { return {}; }

private:
    int pad_;
};

// ---------------------------------------------------------------------------
// Dropout (inverted convention: eval mode is the identity)
// ---------------------------------------------------------------------------

/// Masks are derived from (seed, tick), never from mutable generator state,
/// so a re-run or a resumed run draws the identical mask sequence. The
/// trainer bumps the tick once per step per layer.
template <typename T>
class DropoutT {
public:
    explicit DropoutT(T rate = T(0.5)) : rate_(rate) {}

    void reseed(std::uint64_t seed, std::uint64_t tick) {
        seed_ = seed;
        tick_ = tick;
    }

    TensorT<T> forward(const TensorT<T>& x, Mode mode) {
        if (mode == Mode::eval) {
            mask_.clear();
            return x;
        }
        Pcg32 rng(seed_, rng_stream::kDropout + tick_);
        const T scale = T(1) / (T(1) - rate_);
        mask_.resize(x.size());
        TensorT<T> y(x.shape);
        for (std::size_t i = 0; i < x.size(); ++i) {
            const bool keep = !rng.bernoulli(double(rate_));
            mask_[i] = keep ? 1 : 0;
            y.data[i] = keep ? x.data[i] * scale : T(0);
        }
        return y;
    }

    TensorT<T> backward(const TensorT<T>& gy) {
        if (mask_.empty()) return gy;  // eval-mode forward was identity
        const T scale = T(1) / (T(1) - rate_);
        TensorT<T> gx(gy.shape);
        for (std::size_t i = 0; i < gy.size(); ++i)
            gx.data[i] = mask_[i] ? gy.data[i] * scale : T(0);
        return gx;
    }

    std::vector<ParamT<T>*> params() { return {}; }
    T rate() const { return rate_; }

private:
    T rate_;
    std::uint64_t seed_ = 0, tick_ = 0;
    std::vector<std::uint8_t> mask_;
};

using Conv2d = Conv2dT<float>;
using ConvTranspose2d = ConvTranspose2dT<float>;
using BatchNorm2d = BatchNorm2dT<float>;
using Activation = ActivationT<float>;
using ZeroPad2d = ZeroPad2dT<float>;
using Dropout = DropoutT<float>;

}  // namespace p2ps::nn
