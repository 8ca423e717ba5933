#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "p2ps/nn/adam.hpp"
#include "p2ps/nn/grad_check.hpp"
#include "p2ps/nn/layers.hpp"
#include "p2ps/nn/losses.hpp"
#include "p2ps/nn/rng.hpp"
#include "p2ps/nn/tensor.hpp"

using namespace p2ps::nn;

namespace {

template <typename T>
void fill_random(TensorT<T>& t, Pcg32& rng, double lo = -1.0, double hi = 1.0) {
    for (auto& v : t.data) v = static_cast<T>(rng.uniform(lo, hi));
}

}  // namespace

TEST_CASE("tensor basics") {
    Tensor t(2, 3, 4, 5);
    CHECK(t.size() == 2u * 3 * 4 * 5);
    CHECK_THROWS_AS(Tensor(0, 1, 1, 1), std::invalid_argument);
    t.at(1, 2, 3, 4) = 7.0f;
    CHECK(t.data.back() == 7.0f);
}

TEST_CASE("concat and split are inverses") {
    Pcg32 rng(1, 2);
    Tensor a(1, 2, 2, 3), b(1, 2, 2, 5);
    fill_random(a, rng);
    fill_random(b, rng);
    Tensor cat = concat_channels(a, b);
    CHECK(cat.shape == std::array<int, 4>{1, 2, 2, 8});
    auto [a2, b2] = split_channels(cat, 3);
    CHECK(a2.data == a.data);
    CHECK(b2.data == b.data);

    Tensor bad(1, 3, 2, 5);
    CHECK_THROWS_AS(concat_channels(a, bad), std::invalid_argument);
}

TEST_CASE("pcg32 determinism and range") {
    Pcg32 a(42, 7), b(42, 7), c(42, 8);
    bool same = true, differs = false;
    for (int i = 0; i < 100; ++i) {
        auto va = a.next_u32();
        if (va != b.next_u32()) same = false;
        if (va != c.next_u32()) differs = true;
    }
    CHECK(same);
    CHECK(differs);
    Pcg32 d(1, 1);
    for (int i = 0; i < 1000; ++i) {
        double u = d.uniform(0.8, 1.2);
        CHECK(u >= 0.8);
        CHECK(u < 1.2);
    }
}

// ---------------------------------------------------------------------------
// conv2d
// ---------------------------------------------------------------------------

TEST_CASE("conv2d shapes and parameter counts match the architecture table") {
    // 256x256x1 -> 128x128x64, 4x4 stride 2 same, no bias: 1024 params
    Conv2d c1(4, 4, 1, 64, 2, Padding::same, false);
    CHECK(c1.param_count() == 1024);
    Tensor x(1, 256, 256, 1);
    Tensor y = c1.forward(x);
    CHECK(y.shape == std::array<int, 4>{1, 128, 128, 64});

    // 64x64x128 -> 32x32x256: conv params 524288 (+1024 BN elsewhere)
    Conv2d c2(4, 4, 128, 256, 2, Padding::same, false);
    CHECK(c2.param_count() == 524288);
    Tensor x2(1, 64, 64, 128);
    CHECK(c2.forward(x2).shape == std::array<int, 4>{1, 32, 32, 256});
}

TEST_CASE("conv2d 1x1 identity kernel") {
    Conv2d c(1, 1, 1, 1, 1, Padding::same, false);
    c.weight.value.fill(1.0f);
    Tensor x(1, 1, 1, 1);
    x.data[0] = 3.25f;
    Tensor y = c.forward(x);
    CHECK(y.data[0] == doctest::Approx(3.25f));
}

TEST_CASE("conv2d stride-1 same impulse kernel reproduces its input") {
    // 3x3 kernel with a 1 at the center tap, per channel
    const int C = 3;
    Conv2d c(3, 3, C, C, 1, Padding::same, false);
    c.weight.value.fill(0.0f);
    for (int ch = 0; ch < C; ++ch) c.weight.value.at(1, 1, ch, ch) = 1.0f;
    Pcg32 rng(5, 1);
    Tensor x(2, 6, 7, C);
    fill_random(x, rng);
    Tensor y = c.forward(x);
    REQUIRE(y.shape == x.shape);
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(y.data[i] == doctest::Approx(x.data[i]));
}

TEST_CASE("conv2d channel mismatch raises") {
    Conv2d c(4, 4, 3, 8, 2, Padding::same, false);
    Tensor x(1, 8, 8, 2);
    CHECK_THROWS_AS(c.forward(x), std::invalid_argument);
}

TEST_CASE("conv2d valid padding rejects kernels larger than the input") {
    Conv2d c(4, 4, 1, 1, 1, Padding::valid, false);
    Tensor x(1, 3, 3, 1);
    CHECK_THROWS_AS(c.forward(x), std::invalid_argument);
}

TEST_CASE("adjoint identity: <conv(x), y> == <x, conv_transpose(y)>") {
    Pcg32 rng(11, 3);
    for (int trial = 0; trial < 10; ++trial) {
        const int cin = 1 + int(rng.below(3)), cout = 1 + int(rng.below(3));
        const int h = 2 * (2 + int(rng.below(4)));  // even extents
        const int w = 2 * (2 + int(rng.below(4)));
        Conv2d conv(4, 4, cin, cout, 2, Padding::same, false);
        fill_random(conv.weight.value, rng);

        // Transpose sharing the same weight buffer: maps cout -> cin.
        ConvTranspose2d tconv(4, 4, cout, cin, 2, false);
        tconv.weight.value = conv.weight.value;

        Tensor x(1, h, w, cin), y(1, h / 2, w / 2, cout);
        fill_random(x, rng);
        fill_random(y, rng);

        const double lhs = dot(conv.forward(x), y);
        const double rhs = dot(x, tconv.forward(y));
        CHECK(std::abs(lhs - rhs) <= 1e-4 * std::max({std::abs(lhs), std::abs(rhs), 1.0}));
    }
}

// ---------------------------------------------------------------------------
// conv2d_transpose
// ---------------------------------------------------------------------------

TEST_CASE("conv2d_transpose shapes and parameter counts") {
    // 128x128x128 -> 256x256x1 with bias: 2049 params
    ConvTranspose2d t1(4, 4, 128, 1, 2, true);
    CHECK(t1.param_count() == 2049);
    Tensor x(1, 128, 128, 128);
    CHECK(t1.forward(x).shape == std::array<int, 4>{1, 256, 256, 1});

    // 1x1x512 -> 2x2x512: conv params 4194304
    ConvTranspose2d t2(4, 4, 512, 512, 2, false);
    CHECK(t2.param_count() == 4194304);
    Tensor x2(1, 1, 1, 512);
    CHECK(t2.forward(x2).shape == std::array<int, 4>{1, 2, 2, 512});
}

TEST_CASE("conv2d_transpose on zero input yields bias (or zero)") {
    Pcg32 rng(3, 3);
    ConvTranspose2d t(4, 4, 3, 2, 2, true);
    t.init(rng);
    t.bias->value.data[0] = 0.5f;
    t.bias->value.data[1] = -1.0f;
    Tensor x(1, 4, 4, 3);
    Tensor y = t.forward(x);
    for (int h = 0; h < y.shape[1]; ++h)
        for (int w = 0; w < y.shape[2]; ++w) {
            CHECK(y.at(0, h, w, 0) == doctest::Approx(0.5f));
            CHECK(y.at(0, h, w, 1) == doctest::Approx(-1.0f));
        }
}

// ---------------------------------------------------------------------------
// batchnorm2d
// ---------------------------------------------------------------------------

TEST_CASE("batchnorm train mode normalizes per channel") {
    Pcg32 rng(7, 1);
    BatchNorm2d bn(3);
    Tensor x(4, 5, 6, 3);
    fill_random(x, rng, -3.0, 5.0);
    Tensor y = bn.forward(x, Mode::train);

    const std::size_t n = 4u * 5 * 6;
    for (int c = 0; c < 3; ++c) {
        double mean = 0, var = 0;
        for (int b = 0; b < 4; ++b)
            for (int h = 0; h < 5; ++h)
                for (int w = 0; w < 6; ++w) mean += y.at(b, h, w, c);
        mean /= double(n);
        for (int b = 0; b < 4; ++b)
            for (int h = 0; h < 5; ++h)
                for (int w = 0; w < 6; ++w) {
                    const double d = y.at(b, h, w, c) - mean;
                    var += d * d;
                }
        var /= double(n);
        CHECK(std::abs(mean) < 1e-4);
        // epsilon=1e-3 shrinks the variance slightly below 1
        CHECK(var == doctest::Approx(1.0).epsilon(2e-3));
    }
}

TEST_CASE("batchnorm eval mode with identity statistics is epsilon-close to identity") {
    BatchNorm2d bn(2);
    Pcg32 rng(9, 2);
    Tensor x(2, 3, 3, 2);
    fill_random(x, rng);
    Tensor y = bn.forward(x, Mode::eval);
    for (std::size_t i = 0; i < x.size(); ++i)
        CHECK(y.data[i] == doctest::Approx(x.data[i]).epsilon(1e-3));
}

TEST_CASE("batchnorm constant-per-channel input in train mode returns beta") {
    BatchNorm2d bn(2);
    bn.beta.value.data[0] = 0.25f;
    bn.beta.value.data[1] = -0.75f;
    Tensor x(2, 4, 4, 2);
    for (int b = 0; b < 2; ++b)
        for (int h = 0; h < 4; ++h)
            for (int w = 0; w < 4; ++w) {
                x.at(b, h, w, 0) = 3.0f;
                x.at(b, h, w, 1) = -2.0f;
            }
    Tensor y = bn.forward(x, Mode::train);
    for (int b = 0; b < 2; ++b)
        for (int h = 0; h < 4; ++h)
            for (int w = 0; w < 4; ++w) {
                CHECK(y.at(b, h, w, 0) == doctest::Approx(0.25f).epsilon(1e-5));
                CHECK(y.at(b, h, w, 1) == doctest::Approx(-0.75f).epsilon(1e-5));
            }
}

TEST_CASE("batchnorm stored scalar count follows the 4-per-channel convention") {
    BatchNorm2d bn(128);
    CHECK(bn.param_count() == 512);
    BatchNorm2d bn2(512);
    CHECK(bn2.param_count() == 2048);
}

// ---------------------------------------------------------------------------
// activations, pad, dropout
// ---------------------------------------------------------------------------

TEST_CASE("activation examples") {
    Activation leaky(Act::leaky_relu, 0.2f);
    Tensor x(1, 1, 3, 1);
    x.data = {-1.0f, 0.0f, 2.0f};
    Tensor y = leaky.forward(x);
    CHECK(y.data[0] == doctest::Approx(-0.2f));
    CHECK(y.data[1] == doctest::Approx(0.0f));
    CHECK(y.data[2] == doctest::Approx(2.0f));

    Activation th(Act::tanh_fn);
    Tensor z(1, 1, 1, 1);
    CHECK(th.forward(z).data[0] == doctest::Approx(0.0f));

    Activation rl(Act::relu);
    Tensor r(1, 1, 2, 1);
    r.data = {-3.0f, 5.0f};
    Tensor ry = rl.forward(r);
    CHECK(ry.data[0] == 0.0f);
    CHECK(ry.data[1] == 5.0f);
}

TEST_CASE("zero_pad2d grows spatial extents by 2") {
    ZeroPad2d pad(1);
    Tensor x(1, 32, 32, 4);
    x.fill(1.0f);
    Tensor y = pad.forward(x);
    CHECK(y.shape == std::array<int, 4>{1, 34, 34, 4});
    CHECK(y.at(0, 0, 0, 0) == 0.0f);
    CHECK(y.at(0, 1, 1, 0) == 1.0f);
    Tensor g = pad.backward(y);
    CHECK(g.shape == x.shape);
}

TEST_CASE("dropout eval mode is the identity") {
    Dropout d(0.5f);
    Pcg32 rng(2, 2);
    Tensor x(1, 4, 4, 2);
    fill_random(x, rng);
    Tensor y = d.forward(x, Mode::eval);
    CHECK(y.data == x.data);
}

TEST_CASE("inverted dropout preserves expectation within 2%") {
    Dropout d(0.5f);
    Tensor x(1, 100, 100, 1);
    x.fill(1.0f);
    double total = 0.0;
    for (int trial = 0; trial < 1; ++trial) {
        d.reseed(99, trial);
        Tensor y = d.forward(x, Mode::train);
        for (float v : y.data) total += v;
    }
    const double mean = total / double(x.size());
    CHECK(mean == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("dropout mask is reproducible from (seed, tick)") {
    Dropout d1(0.5f), d2(0.5f);
    d1.reseed(5, 17);
    d2.reseed(5, 17);
    Tensor x(1, 8, 8, 3);
    x.fill(2.0f);
    CHECK(d1.forward(x, Mode::train).data == d2.forward(x, Mode::train).data);
}

// ---------------------------------------------------------------------------
// losses
// ---------------------------------------------------------------------------

TEST_CASE("bce_with_logits analytic values") {
    Tensor z(1, 1, 1, 1), t(1, 1, 1, 1);
    z.data[0] = 0.0f;
    t.data[0] = 1.0f;
    CHECK(bce_with_logits(z, t) == doctest::Approx(std::log(2.0)).epsilon(1e-6));

    Tensor z2(1, 1, 2, 1), t2(1, 1, 2, 1);
    z2.data = {40.0f, -40.0f};
    t2.data = {1.0f, 0.0f};
    CHECK(bce_with_logits(z2, t2) == doctest::Approx(0.0).epsilon(1e-9));

    z2.data = {1000.0f, -1000.0f};
    CHECK(std::isfinite(bce_with_logits(z2, t2)));
    z2.data = {-1000.0f, 1000.0f};
    CHECK(std::isfinite(bce_with_logits(z2, t2)));
}

TEST_CASE("bce_with_logits equals naive sigmoid cross-entropy on moderate logits") {
    Pcg32 rng(13, 1);
    Tensor z(1, 4, 4, 2), t(1, 4, 4, 2);
    for (auto& v : z.data) v = static_cast<float>(rng.uniform(-10.0, 10.0));
    for (auto& v : t.data) v = rng.bernoulli(0.5) ? 1.0f : 0.0f;
    double naive = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        const double s = 1.0 / (1.0 + std::exp(-double(z.data[i])));
        naive += -double(t.data[i]) * std::log(s) - (1.0 - double(t.data[i])) * std::log(1.0 - s);
    }
    naive /= double(z.size());
    CHECK(bce_with_logits(z, t) == doctest::Approx(naive).epsilon(1e-6));
}

TEST_CASE("l1 loss") {
    Tensor a(1, 2, 2, 1), b(1, 2, 2, 1);
    a.fill(0.0f);
    b.fill(1.0f);
    CHECK(l1_loss(a, b) == doctest::Approx(1.0));
    Tensor c(1, 2, 2, 2);
    CHECK_THROWS_AS(l1_loss(a, c), std::invalid_argument);
}

// ---------------------------------------------------------------------------
// adam
// ---------------------------------------------------------------------------

TEST_CASE("adam first step equals -lr * sign(grad) up to epsilon") {
    ParamT<float> p(std::array<int, 4>{1, 1, 1, 1});
    p.value.data[0] = 0.0f;
    p.grad.data[0] = 1.0f;
    AdamT<float> opt(2e-4f, 0.5f, 0.999f);
    opt.attach({&p});
    opt.step();
    CHECK(p.value.data[0] == doctest::Approx(-2e-4).epsilon(1e-4));
    CHECK(p.grad.data[0] == 0.0f);  // gradients zeroed after the step
}

TEST_CASE("adam with zero gradient leaves parameters unchanged") {
    ParamT<float> p(std::array<int, 4>{1, 1, 2, 3});
    Pcg32 rng(21, 1);
    fill_random(p.value, rng);
    auto before = p.value.data;
    AdamT<float> opt(1e-3f, 0.9f, 0.999f);
    opt.attach({&p});
    opt.step();
    CHECK(p.value.data == before);
}

TEST_CASE("adam with constant positive gradient decreases the parameter monotonically") {
    ParamT<float> p(std::array<int, 4>{1, 1, 1, 1});
    p.value.data[0] = 1.0f;
    AdamT<float> opt(1e-2f, 0.5f, 0.999f);
    opt.attach({&p});
    float prev = p.value.data[0];
    for (int i = 0; i < 2; ++i) {
        p.grad.data[0] = 3.0f;
        opt.step();
        CHECK(p.value.data[0] < prev);
        prev = p.value.data[0];
    }
}

// ---------------------------------------------------------------------------
// gradient checks (double precision, central differences)
// ---------------------------------------------------------------------------

namespace {

GradCheckable bind_layer(Conv2dT<double>& l) {
    return {[&](const TensorT<double>& x) { return l.forward(x); },
            [&](const TensorT<double>& g) { return l.backward(g); }, l.params()};
}
GradCheckable bind_layer(ConvTranspose2dT<double>& l) {
    return {[&](const TensorT<double>& x) { return l.forward(x); },
            [&](const TensorT<double>& g) { return l.backward(g); }, l.params()};
}
GradCheckable bind_layer(BatchNorm2dT<double>& l, Mode mode) {
    return {[&, mode](const TensorT<double>& x) { return l.forward(x, mode, false); },
            [&](const TensorT<double>& g) { return l.backward(g); }, l.params()};
}
GradCheckable bind_layer(ActivationT<double>& l) {
    return {[&](const TensorT<double>& x) { return l.forward(x); },
            [&](const TensorT<double>& g) { return l.backward(g); }, l.params()};
}

}  // namespace

TEST_CASE("grad check: conv2d 4x4 stride 2") {
    Pcg32 rng(31, 1);
    Conv2dT<double> conv(4, 4, 2, 3, 2, Padding::same, true);
    conv.init(rng, 0.5);
    TensorT<double> x(1, 8, 8, 2);
    fill_random(x, rng);
    auto g = bind_layer(conv);
    CHECK(grad_check(g, x, 1e-4, rng) < 1e-3);
}

TEST_CASE("grad check: conv2d_transpose 4x4 stride 2") {
    Pcg32 rng(32, 1);
    ConvTranspose2dT<double> t(4, 4, 3, 2, 2, true);
    t.init(rng, 0.5);
    TensorT<double> x(1, 4, 4, 3);
    fill_random(x, rng);
    auto g = bind_layer(t);
    CHECK(grad_check(g, x, 1e-4, rng) < 1e-3);
}

TEST_CASE("grad check: batchnorm train mode") {
    Pcg32 rng(33, 1);
    BatchNorm2dT<double> bn(2);
    for (auto& v : bn.gamma.value.data) v = rng.uniform(0.5, 1.5);
    for (auto& v : bn.beta.value.data) v = rng.uniform(-0.5, 0.5);
    TensorT<double> x(4, 4, 4, 2);
    fill_random(x, rng, -2.0, 2.0);
    auto g = bind_layer(bn, Mode::train);
    CHECK(grad_check(g, x, 1e-4, rng) < 1e-3);
}

TEST_CASE("grad check: leaky_relu away from zero is near machine accurate") {
    Pcg32 rng(34, 1);
    ActivationT<double> act(Act::leaky_relu, 0.2);
    TensorT<double> x(1, 4, 4, 2);
    for (auto& v : x.data) {
        v = rng.uniform(0.5, 2.0);
        if (rng.bernoulli(0.5)) v = -v;  // bounded away from 0
    }
    auto g = bind_layer(act);
    CHECK(grad_check(g, x, 1e-4, rng) < 1e-6);
}

TEST_CASE("grad check: tanh and sigmoid") {
    Pcg32 rng(35, 1);
    for (Act kind : {Act::tanh_fn, Act::sigmoid}) {
        ActivationT<double> act(kind);
        TensorT<double> x(1, 3, 3, 2);
        fill_random(x, rng, -2.0, 2.0);
        auto g = bind_layer(act);
        CHECK(grad_check(g, x, 1e-4, rng) < 1e-3);
    }
}

TEST_CASE("grad check: dropout with a fixed mask") {
    Pcg32 rng(36, 1);
    DropoutT<double> d(0.5);
    d.reseed(7, 3);
    TensorT<double> x(1, 4, 4, 2);
    fill_random(x, rng);
    GradCheckable g{[&](const TensorT<double>& xi) { return d.forward(xi, Mode::train); },
                    [&](const TensorT<double>& gi) { return d.backward(gi); },
                    {}};
    CHECK(grad_check(g, x, 1e-4, rng) < 1e-6);
}
