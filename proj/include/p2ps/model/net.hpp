#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "p2ps/model/config.hpp"
#include "p2ps/nn/layers.hpp"
#include "p2ps/nn/tensor.hpp"

namespace p2ps::model {

using nn::Mode;
using nn::Tensor;

/// One row of the architecture summary. `out_shape` holds (batch, h, w, c)
/// with batch = -1 rendered as "None"; input rows carry zero params.
struct LayerRow {
    std::string name;
    std::array<int, 4> out_shape;
    long long params = 0;
    std::string connected_to;
    bool is_input = false;

    std::string shape_str() const;
};

/// A parameter or persistent buffer with its checkpoint name.
struct NamedParam {
    std::string name;
    nn::Param* param;
};
struct NamedBuffer {
    std::string name;
    std::vector<float>* buf;
};

/// Encoder stage: 4x4 stride-2 conv (no bias), optional batch norm,
/// LeakyReLU(0.2). The first stage of either network omits the norm.
struct DownBlock {
    DownBlock(int cin, int cout, bool with_bn);

    Tensor forward(const Tensor& x, Mode mode, bool update_stats);
    Tensor backward(const Tensor& gy, bool accumulate_param_grads);

    nn::Conv2d conv;
    std::optional<nn::BatchNorm2d> bn;
    nn::Activation act;
};

/// Decoder stage: 4x4 stride-2 transposed conv (no bias), batch norm,
/// optional dropout(0.5), ReLU.
struct UpBlock {
    UpBlock(int cin, int cout, bool with_dropout);

    Tensor forward(const Tensor& x, Mode mode, bool update_stats);
    Tensor backward(const Tensor& gy, bool accumulate_param_grads);

    nn::ConvTranspose2d tconv;
    nn::BatchNorm2d bn;
    std::optional<nn::Dropout> dropout;
    nn::Activation act;
};

/// U-Net generator: `depth` encoder stages down to the bottleneck, depth-1
/// decoder stages each concatenated with its mirror encoder output, and a
/// final transposed conv to one tanh channel.
class Generator {
public:
    explicit Generator(const ModelConfig& cfg);

    Tensor forward(const Tensor& x, Mode mode, bool update_stats = true);
    /// Backpropagates through the cached forward; accumulates parameter
    /// gradients; returns the input gradient.
    Tensor backward(const Tensor& gy);

    /// Re-keys every dropout layer for the given global step so masks are a
    /// pure function of (seed, step, layer index).
    void set_dropout_step(std::uint64_t seed, std::uint64_t step);

    std::vector<nn::Param*> params();
    std::vector<NamedParam> named_params();
    std::vector<NamedBuffer> named_buffers();
    std::vector<LayerRow> param_table() const;
    long long param_count() const;
    const ModelConfig& config() const { return cfg_; }

private:
    ModelConfig cfg_;
    std::vector<int> enc_ch_;  // encoder output channels per stage
    std::vector<DownBlock> downs_;
    std::vector<UpBlock> ups_;
    nn::ConvTranspose2d final_;
    nn::Activation tanh_;
};

/// PatchGAN discriminator over the channel-concatenated (image, mask) pair:
/// three stride-2 blocks, then two zero-padded 4x4 valid convolutions
/// producing a patch logit map (30x30 at image_size 256).
class Discriminator {
public:
    explicit Discriminator(const ModelConfig& cfg);

    Tensor forward(const Tensor& image, const Tensor& mask, Mode mode, bool update_stats = true);
    /// Returns (grad wrt image, grad wrt mask).
    std::pair<Tensor, Tensor> backward(const Tensor& gy, bool accumulate_param_grads);

    std::vector<nn::Param*> params();
    std::vector<NamedParam> named_params();
    std::vector<NamedBuffer> named_buffers();
    std::vector<LayerRow> param_table() const;
    long long param_count() const;
    int logit_extent() const;  // spatial size of the output map

private:
    ModelConfig cfg_;
    std::vector<DownBlock> blocks_;
    nn::ZeroPad2d pad1_;
    nn::Conv2d mid_conv_;
    nn::BatchNorm2d mid_bn_;
    nn::Activation mid_act_;
    nn::ZeroPad2d pad2_;
    nn::Conv2d final_conv_;
};

/// Renders rows as the familiar four-column summary table.
std::string format_param_table(const std::vector<LayerRow>& rows, long long total);

}  // namespace p2ps::model
