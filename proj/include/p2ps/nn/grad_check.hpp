#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "p2ps/nn/layers.hpp"
#include "p2ps/nn/rng.hpp"
#include "p2ps/nn/tensor.hpp"

namespace p2ps::nn {

/// A layer bound for finite-difference verification. `forward` must be pure
/// and re-runnable (fixed mode, fixed dropout mask); `backward` is valid
/// after the most recent forward.
struct GradCheckable {
    std::function<TensorT<double>(const TensorT<double>&)> forward;
    std::function<TensorT<double>(const TensorT<double>&)> backward;
    std::vector<ParamT<double>*> params;
};

/// Compares analytic input- and parameter-gradients of the scalar loss
/// L = <forward(x), r> (r a fixed random projection) against central finite
/// differences. Returns the maximum relative error observed. Meant for
/// small tensors in double precision.
inline double grad_check(GradCheckable& layer, TensorT<double> x, double eps, Pcg32& rng) {
    auto rel_err = [](double a, double f) {
        const double denom = std::max(std::abs(a) + std::abs(f), 1e-10);
        return std::abs(a - f) / denom;
    };

    TensorT<double> y0 = layer.forward(x);
    TensorT<double> r(y0.shape);
    for (auto& v : r.data) v = rng.uniform(-1.0, 1.0);

    for (auto* p : layer.params) p->zero_grad();
    TensorT<double> gx = layer.backward(r);

    auto loss_at = [&](const TensorT<double>& xi) {
        TensorT<double> y = layer.forward(xi);
        return dot(y, r);
    };

    double max_err = 0.0;

    for (std::size_t i = 0; i < x.size(); ++i) {
        const double orig = x.data[i];
        x.data[i] = orig + eps;
        const double lp = loss_at(x);
        x.data[i] = orig - eps;
        const double lm = loss_at(x);
        x.data[i] = orig;
        const double fd = (lp - lm) / (2.0 * eps);
        max_err = std::max(max_err, rel_err(gx.data[i], fd));
    }

    for (auto* p : layer.params) {
        for (std::size_t i = 0; i < p->size(); ++i) {
            const double orig = p->value.data[i];
            p->value.data[i] = orig + eps;
            const double lp = loss_at(x);
            p->value.data[i] = orig - eps;
            const double lm = loss_at(x);
            p->value.data[i] = orig;
            const double fd = (lp - lm) / (2.0 * eps);
            max_err = std::max(max_err, rel_err(p->grad.data[i], fd));
        }
    }

    // Leave caches consistent with the unperturbed input.
    layer.forward(x);
    return max_err;
}

}  // namespace p2ps::nn
