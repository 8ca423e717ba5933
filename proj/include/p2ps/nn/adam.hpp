#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "p2ps/nn/layers.hpp"

namespace p2ps::nn {

/// Adam with bias correction over a fixed list of attached parameters.
/// step() consumes and zeroes the accumulated gradients.
template <typename T>
class AdamT {
public:
    AdamT(T lr, T beta1, T beta2, T epsilon = T(1e-8))
        : lr(lr), beta1(beta1), beta2(beta2), epsilon(epsilon) {}

    void attach(const std::vector<ParamT<T>*>& params) {
        params_ = params;
        slots_.clear();
        slots_.reserve(params.size());
        for (auto* p : params) {
            slots_.push_back(Slot{std::vector<T>(p->size(), T(0)), std::vector<T>(p->size(), T(0))});
        }
        t_ = 0;
    }

    void step() {
        ++t_;
        const double bc1 = 1.0 - std::pow(double(beta1), double(t_));
        const double bc2 = 1.0 - std::pow(double(beta2), double(t_));
        for (std::size_t k = 0; k < params_.size(); ++k) {
            ParamT<T>& p = *params_[k];
            Slot& s = slots_[k];
            if (s.m.size() != p.size()) throw std::invalid_argument("adam: moment/param shape mismatch");
            if (!p.trainable) {
                p.zero_grad();
                continue;
            }
            for (std::size_t i = 0; i < p.size(); ++i) {
                const T g = p.grad.data[i];
                s.m[i] = beta1 * s.m[i] + (T(1) - beta1) * g;
                s.v[i] = beta2 * s.v[i] + (T(1) - beta2) * g * g;
                const double mhat = double(s.m[i]) / bc1;
                const double vhat = double(s.v[i]) / bc2;
                p.value.data[i] -= static_cast<T>(double(lr) * mhat / (std::sqrt(vhat) + double(epsilon)));
            }
            p.zero_grad();
        }
    }

    std::int64_t step_count() const { return t_; }
    void set_step_count(std::int64_t t) { t_ = t; }

    std::size_t slot_count() const { return slots_.size(); }
    std::vector<T>& first_moment(std::size_t k) { return slots_[k].m; }
    std::vector<T>& second_moment(std::size_t k) { return slots_[k].v; }

    T lr, beta1, beta2, epsilon;

private:
    struct Slot {
        std::vector<T> m, v;
    };
    std::vector<ParamT<T>*> params_;
    std::vector<Slot> slots_;
    std::int64_t t_ = 0;
};

using Adam = AdamT<float>;

}  // namespace p2ps::nn
