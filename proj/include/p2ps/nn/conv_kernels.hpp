#pragma once

#include <algorithm>
#include <stdexcept>
#include <string>

#include "p2ps/nn/tensor.hpp"

namespace p2ps::nn {

enum class Padding { same, valid };

/// Resolved spatial arithmetic for one convolution call.
struct ConvGeom {
    int stride = 1;
    int pad_top = 0;
    int pad_left = 0;
    int out_h = 0;
    int out_w = 0;
};

/// Output extents and pad offsets for the given input. `same` follows the
/// ceil(in/stride) rule with the surplus pad pixel placed at bottom/right;
/// `valid` requires the kernel to fit.
inline ConvGeom conv_geometry(int in_h, int in_w, int kh, int kw, int stride, Padding pad) {
    ConvGeom g;
    g.stride = stride;
    if (pad == Padding::same) {
        g.out_h = (in_h + stride - 1) / stride;
        g.out_w = (in_w + stride - 1) / stride;
        int pad_h = std::max((g.out_h - 1) * stride + kh - in_h, 0);
        int pad_w = std::max((g.out_w - 1) * stride + kw - in_w, 0);
        g.pad_top = pad_h / 2;
        g.pad_left = pad_w / 2;
    } else {
        g.out_h = (in_h - kh) / stride + 1;
        g.out_w = (in_w - kw) / stride + 1;
        if (in_h < kh || in_w < kw) {
            throw std::invalid_argument("conv: zero-sized output, kernel " + std::to_string(kh) +
                                        "x" + std::to_string(kw) + " does not fit input " +
                                        std::to_string(in_h) + "x" + std::to_string(in_w));
        }
    }
    return g;
}

namespace detail {

/// y[b,oh,ow,oc] = sum_{kh,kw,ic} x[b, oh*s - pt + kh, ow*s - pl + kw, ic] * w[kh,kw,ic,oc].
/// Inner loop runs over the contiguous output-channel axis.
template <typename T>
void conv2d_forward_kernel(const TensorT<T>& x, const TensorT<T>& w, const TensorT<T>* bias,
                           const ConvGeom& g, TensorT<T>& y) {
    const int kh = w.shape[0], kw = w.shape[1], cin = w.shape[2], cout = w.shape[3];
    const int in_h = x.shape[1], in_w = x.shape[2];
    for (int b = 0; b < x.shape[0]; ++b) {
        for (int oh = 0; oh < g.out_h; ++oh) {
            for (int ow = 0; ow < g.out_w; ++ow) {
                T* yp = &y.at(b, oh, ow, 0);
                if (bias) {
                    const T* bp = bias->data.data();
                    for (int oc = 0; oc < cout; ++oc) yp[oc] = bp[oc];
                } else {
                    for (int oc = 0; oc < cout; ++oc) yp[oc] = T(0);
                }
                for (int fy = 0; fy < kh; ++fy) {
                    const int ih = oh * g.stride - g.pad_top + fy;
                    if (ih < 0 || ih >= in_h) continue;
                    for (int fx = 0; fx < kw; ++fx) {
                        const int iw = ow * g.stride - g.pad_left + fx;
                        if (iw < 0 || iw >= in_w) continue;
                        const T* xp = &x.at(b, ih, iw, 0);
                        const T* wp = &w.at(fy, fx, 0, 0);
                        for (int ic = 0; ic < cin; ++ic) {
                            const T xv = xp[ic];
                            const T* wrow = wp + static_cast<std::size_t>(ic) * cout;
                            for (int oc = 0; oc < cout; ++oc) yp[oc] += xv * wrow[oc];
                        }
                    }
                }
            }
        }
    }
}

/// gx[b,ih,iw,ic] += sum_{oh,ow,oc} gy[b,oh,ow,oc] * w[kh,kw,ic,oc] over aligned taps.
/// gx must be zero-initialized to the forward input shape.
template <typename T>
void conv2d_backward_data_kernel(const TensorT<T>& gy, const TensorT<T>& w, const ConvGeom& g,
                                 TensorT<T>& gx) {
    const int kh = w.shape[0], kw = w.shape[1], cin = w.shape[2], cout = w.shape[3];
    const int in_h = gx.shape[1], in_w = gx.shape[2];
    for (int b = 0; b < gy.shape[0]; ++b) {
        for (int oh = 0; oh < g.out_h; ++oh) {
            for (int ow = 0; ow < g.out_w; ++ow) {
                const T* gp = &gy.at(b, oh, ow, 0);
                for (int fy = 0; fy < kh; ++fy) {
                    const int ih = oh * g.stride - g.pad_top + fy;
                    if (ih < 0 || ih >= in_h) continue;
                    for (int fx = 0; fx < kw; ++fx) {
                        const int iw = ow * g.stride - g.pad_left + fx;
                        if (iw < 0 || iw >= in_w) continue;
                        T* xp = &gx.at(b, ih, iw, 0);
                        const T* wp = &w.at(fy, fx, 0, 0);
                        for (int ic = 0; ic < cin; ++ic) {
                            const T* wrow = wp + static_cast<std::size_t>(ic) * cout;
                            T acc = T(0);
                            for (int oc = 0; oc < cout; ++oc) acc += gp[oc] * wrow[oc];
                            xp[ic] += acc;
                        }
                    }
                }
            }
        }
    }
}

/// gw[kh,kw,ic,oc] += sum_{b,oh,ow} x[b,ih,iw,ic] * gy[b,oh,ow,oc].
/// Accumulates (does not clear gw); gb likewise when non-null.
template <typename T>
void conv2d_backward_weights_kernel(const TensorT<T>& x, const TensorT<T>& gy, const ConvGeom& g,
                                    TensorT<T>& gw, TensorT<T>* gb) {
    const int kh = gw.shape[0], kw = gw.shape[1], cin = gw.shape[2], cout = gw.shape[3];
    const int in_h = x.shape[1], in_w = x.shape[2];
    for (int b = 0; b < x.shape[0]; ++b) {
        for (int oh = 0; oh < g.out_h; ++oh) {
            for (int ow = 0; ow < g.out_w; ++ow) {
                const T* gp = &gy.at(b, oh, ow, 0);
                if (gb) {
                    T* bp = gb->data.data();
                    for (int oc = 0; oc < cout; ++oc) bp[oc] += gp[oc];
                }
                for (int fy = 0; fy < kh; ++fy) {
                    const int ih = oh * g.stride - g.pad_top + fy;
                    if (ih < 0 || ih >= in_h) continue;
                    for (int fx = 0; fx < kw; ++fx) {
                        const int iw = ow * g.stride - g.pad_left + fx;
                        if (iw < 0 || iw >= in_w) continue;
                        const T* xp = &x.at(b, ih, iw, 0);
                        T* wp = &gw.at(fy, fx, 0, 0);
                        for (int ic = 0; ic < cin; ++ic) {
                            const T xv = xp[ic];
                            T* wrow = wp + static_cast<std::size_t>(ic) * cout;
                            for (int oc = 0; oc < cout; ++oc) wrow[oc] += xv * gp[oc];
                        }
                    }
                }
            }
        }
    }
}

}  // namespace detail
}  // namespace p2ps::nn
