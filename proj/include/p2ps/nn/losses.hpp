#pragma once

#include <cmath>
#include <stdexcept>

#include "p2ps/nn/tensor.hpp"

namespace p2ps::nn {

namespace detail {
/// log(1 + exp(z)) without overflow for large |z|.
template <typename T>
double softplus(T z) {
    const double zd = double(z);
    return std::log1p(std::exp(-std::abs(zd))) + std::max(zd, 0.0);
}
}  // namespace detail

/// Mean binary cross-entropy on raw logits: mean(softplus(z) - t*z).
template <typename T>
double bce_with_logits(const TensorT<T>& logits, const TensorT<T>& targets) {
    if (!logits.same_shape(targets)) throw std::invalid_argument("bce_with_logits: shape mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i)
        acc += detail::softplus(logits.data[i]) - double(targets.data[i]) * double(logits.data[i]);
    return acc / double(logits.size());
}

/// Same loss against an all-`target` tensor (the GAN real/fake labels).
template <typename T>
double bce_with_logits_const(const TensorT<T>& logits, T target) {
    double acc = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i)
        acc += detail::softplus(logits.data[i]) - double(target) * double(logits.data[i]);
    return acc / double(logits.size());
}

/// d/dlogits of bce_with_logits: (sigmoid(z) - t) / N.
template <typename T>
TensorT<T> bce_with_logits_grad(const TensorT<T>& logits, const TensorT<T>& targets) {
    if (!logits.same_shape(targets)) throw std::invalid_argument("bce_with_logits: shape mismatch");
    TensorT<T> g(logits.shape);
    const double n = double(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i) {
        const double s = 1.0 / (1.0 + std::exp(-double(logits.data[i])));
        g.data[i] = static_cast<T>((s - double(targets.data[i])) / n);
    }
    return g;
}

template <typename T>
TensorT<T> bce_with_logits_const_grad(const TensorT<T>& logits, T target) {
    TensorT<T> g(logits.shape);
    const double n = double(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i) {
        const double s = 1.0 / (1.0 + std::exp(-double(logits.data[i])));
        g.data[i] = static_cast<T>((s - double(target)) / n);
    }
    return g;
}

/// Mean absolute difference.
template <typename T>
double l1_loss(const TensorT<T>& a, const TensorT<T>& b) {
    if (!a.same_shape(b)) throw std::invalid_argument("l1_loss: shape mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += std::abs(double(a.data[i]) - double(b.data[i]));
    return acc / double(a.size());
}

/// d/da of l1_loss: sign(a - b) / N, with sign(0) = 0.
template <typename T>
TensorT<T> l1_grad(const TensorT<T>& a, const TensorT<T>& b) {
    if (!a.same_shape(b)) throw std::invalid_argument("l1_loss: shape mismatch");
    TensorT<T> g(a.shape);
    const T n = static_cast<T>(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        const T d = a.data[i] - b.data[i];
        g.data[i] = (d > T(0) ? T(1) : (d < T(0) ? T(-1) : T(0))) / n;
    }
    return g;
}

}  // namespace p2ps::nn
