#include "p2ps/model/net.hpp"

#include <algorithm>
#include <sstream>

#include "p2ps/errors.hpp"
#include "p2ps/nn/rng.hpp"

namespace p2ps::model {

using nn::Act;
using nn::Padding;

// ---------------------------------------------------------------------------
// config
// ---------------------------------------------------------------------------

void ModelConfig::validate() const {
    if (depth < 2) throw ConfigError("depth must be >= 2, got " + std::to_string(depth));
    if (depth > 30) throw ConfigError("depth too large: " + std::to_string(depth));
    if (image_size < 1) throw ConfigError("image_size must be positive");
    const int stride_total = 1 << depth;
    if (image_size % stride_total != 0 || image_size / stride_total < 1) {
        throw ConfigError("image_size " + std::to_string(image_size) +
                          " is not a positive multiple of 2^depth = " +
                          std::to_string(stride_total));
    }
    if (image_size % 8 != 0 || image_size / 8 < 4) {
        throw ConfigError("image_size " + std::to_string(image_size) +
                          " too small for the discriminator (needs image_size/8 >= 4)");
    }
    if (in_channels < 1) throw ConfigError("in_channels must be >= 1");
    if (base_channels < 1) throw ConfigError("base_channels must be >= 1");
    if (lambda_l1 < 0) throw ConfigError("lambda_l1 must be >= 0");
    if (lr < 0) throw ConfigError("lr must be >= 0");
    if (beta1 < 0 || beta1 >= 1 || beta2 < 0 || beta2 >= 1) {
        throw ConfigError("adam betas must lie in [0, 1)");
    }
    if (dropout_up_blocks < 0 || dropout_up_blocks > depth - 1) {
        throw ConfigError("dropout_up_blocks must lie in [0, depth-1]");
    }
}

std::uint64_t ModelConfig::fingerprint() const {
    // FNV-1a over the fields that determine parameter shapes and wiring.
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&h](std::uint64_t v) {
        for (int i = 0; i < 8; ++i) {
            h ^= (v >> (8 * i)) & 0xff;
            h *= 1099511628211ULL;
        }
    };
    mix(static_cast<std::uint64_t>(image_size));
    mix(static_cast<std::uint64_t>(in_channels));
    mix(static_cast<std::uint64_t>(base_channels));
    mix(static_cast<std::uint64_t>(depth));
    mix(static_cast<std::uint64_t>(dropout_up_blocks));
    return h;
}

// ---------------------------------------------------------------------------
// blocks
// ---------------------------------------------------------------------------

DownBlock::DownBlock(int cin, int cout, bool with_bn)
    : conv(4, 4, cin, cout, 2, Padding::same, /*use_bias=*/false), act(Act::leaky_relu, 0.2f) {
    if (with_bn) bn.emplace(cout);
}

Tensor DownBlock::forward(const Tensor& x, Mode mode, bool update_stats) {
    Tensor y = conv.forward(x);
    if (bn) y = bn->forward(y, mode, update_stats);
    return act.forward(y);
}

Tensor DownBlock::backward(const Tensor& gy, bool accumulate_param_grads) {
    Tensor g = act.backward(gy);
    if (bn) g = bn->backward(g, accumulate_param_grads);
    return conv.backward(g, accumulate_param_grads);
}

UpBlock::UpBlock(int cin, int cout, bool with_dropout)
    : tconv(4, 4, cin, cout, 2, /*use_bias=*/false), bn(cout), act(Act::relu) {
    if (with_dropout) dropout.emplace(0.5f);
}

Tensor UpBlock::forward(const Tensor& x, Mode mode, bool update_stats) {
    Tensor y = tconv.forward(x);
    y = bn.forward(y, mode, update_stats);
    if (dropout) y = dropout->forward(y, mode);
    return act.forward(y);
}

Tensor UpBlock::backward(const Tensor& gy, bool accumulate_param_grads) {
    Tensor g = act.backward(gy);
    if (dropout) g = dropout->backward(g);
    g = bn.backward(g, accumulate_param_grads);
    return tconv.backward(g, accumulate_param_grads);
}

// ---------------------------------------------------------------------------
// generator
// ---------------------------------------------------------------------------

namespace {

ModelConfig validated(ModelConfig cfg) {
    cfg.validate();
    return cfg;
}

std::vector<int> encoder_channels(const ModelConfig& cfg) {
    std::vector<int> ch(cfg.depth);
    for (int k = 0; k < cfg.depth; ++k) {
        const long long c = static_cast<long long>(cfg.base_channels) << std::min(k, 3);
        ch[k] = static_cast<int>(std::min<long long>(c, 8LL * cfg.base_channels));
    }
    return ch;
}

}  // namespace

Generator::Generator(const ModelConfig& cfg)
    : cfg_(validated(cfg)),
      enc_ch_(encoder_channels(cfg_)),
      final_(4, 4, 2 * enc_ch_[0], 1, 2, /*use_bias=*/true),
      tanh_(Act::tanh_fn) {
    const int d = cfg_.depth;

    downs_.reserve(d);
    int cin = cfg_.in_channels;
    for (int k = 0; k < d; ++k) {
        downs_.emplace_back(cin, enc_ch_[k], /*with_bn=*/k > 0);
        cin = enc_ch_[k];
    }

    ups_.reserve(d - 1);
    for (int j = 0; j < d - 1; ++j) {
        const int in_c = (j == 0) ? enc_ch_[d - 1] : 2 * enc_ch_[d - 1 - j];
        const int out_c = enc_ch_[d - 2 - j];
        ups_.emplace_back(in_c, out_c, /*with_dropout=*/j < cfg_.dropout_up_blocks);
    }

    nn::Pcg32 rng(cfg_.seed, nn::rng_stream::kWeightInit);
    for (auto& blk : downs_) blk.conv.init(rng);
    for (auto& blk : ups_) blk.tconv.init(rng);
    final_.init(rng);
}

Tensor Generator::forward(const Tensor& x, Mode mode, bool update_stats) {
    if (x.shape[1] != cfg_.image_size || x.shape[2] != cfg_.image_size ||
        x.shape[3] != cfg_.in_channels) {
        throw DataError("generator input " + x.shape_str() + " does not match configured (" +
                        std::to_string(cfg_.image_size) + ", " + std::to_string(cfg_.image_size) +
                        ", " + std::to_string(cfg_.in_channels) + ")");
    }
    const int d = cfg_.depth;
    std::vector<Tensor> enc(d);
    Tensor cur = x;
    for (int k = 0; k < d; ++k) {
        enc[k] = downs_[k].forward(cur, mode, update_stats);
        cur = enc[k];
    }
    for (int j = 0; j < d - 1; ++j) {
        cur = ups_[j].forward(cur, mode, update_stats);
        cur = nn::concat_channels(cur, enc[d - 2 - j]);
    }
    cur = final_.forward(cur);
    return tanh_.forward(cur);
}

Tensor Generator::backward(const Tensor& gy) {
    const int d = cfg_.depth;
    Tensor g = tanh_.backward(gy);
    g = final_.backward(g, true);

    std::vector<Tensor> skip_grad(d - 1);
    for (int j = d - 2; j >= 0; --j) {
        const int up_out = enc_ch_[d - 2 - j];
        auto [gu, ge] = nn::split_channels(g, up_out);
        skip_grad[d - 2 - j] = std::move(ge);
        g = ups_[j].backward(gu, true);
    }
    // g now holds the gradient at the bottleneck output enc[d-1].
    for (int k = d - 1; k >= 1; --k) {
        g = downs_[k].backward(g, true);
        nn::add_inplace(g, skip_grad[k - 1]);
    }
    return downs_[0].backward(g, true);
}

void Generator::set_dropout_step(std::uint64_t seed, std::uint64_t step) {
    const std::uint64_t n = ups_.size();
    for (std::uint64_t j = 0; j < n; ++j) {
        if (ups_[j].dropout) ups_[j].dropout->reseed(seed, step * n + j);
    }
}

std::vector<nn::Param*> Generator::params() {
    std::vector<nn::Param*> out;
    for (auto& np : named_params()) out.push_back(np.param);
    return out;
}

std::vector<NamedParam> Generator::named_params() {
    std::vector<NamedParam> out;
    for (std::size_t k = 0; k < downs_.size(); ++k) {
        const std::string base = "gen.down" + std::to_string(k);
        out.push_back({base + ".conv.weight", &downs_[k].conv.weight});
        if (downs_[k].bn) {
            out.push_back({base + ".bn.gamma", &downs_[k].bn->gamma});
            out.push_back({base + ".bn.beta", &downs_[k].bn->beta});
        }
    }
    for (std::size_t j = 0; j < ups_.size(); ++j) {
        const std::string base = "gen.up" + std::to_string(j);
        out.push_back({base + ".tconv.weight", &ups_[j].tconv.weight});
        out.push_back({base + ".bn.gamma", &ups_[j].bn.gamma});
        out.push_back({base + ".bn.beta", &ups_[j].bn.beta});
    }
    out.push_back({"gen.final.tconv.weight", &final_.weight});
    out.push_back({"gen.final.tconv.bias", &*final_.bias});
    return out;
}

std::vector<NamedBuffer> Generator::named_buffers() {
    std::vector<NamedBuffer> out;
    for (std::size_t k = 0; k < downs_.size(); ++k) {
        if (!downs_[k].bn) continue;
        const std::string base = "gen.down" + std::to_string(k);
        out.push_back({base + ".bn.moving_mean", &downs_[k].bn->moving_mean});
        out.push_back({base + ".bn.moving_var", &downs_[k].bn->moving_var});
    }
    for (std::size_t j = 0; j < ups_.size(); ++j) {
        const std::string base = "gen.up" + std::to_string(j);
        out.push_back({base + ".bn.moving_mean", &ups_[j].bn.moving_mean});
        out.push_back({base + ".bn.moving_var", &ups_[j].bn.moving_var});
    }
    return out;
}

long long Generator::param_count() const {
    long long total = 0;
    for (const auto& blk : downs_) {
        total += blk.conv.param_count();
        if (blk.bn) total += blk.bn->param_count();
    }
    for (const auto& blk : ups_) total += blk.tconv.param_count() + blk.bn.param_count();
    return total + final_.param_count();
}

// Layer names follow the framework-style global counters that produced the
// reference tables: two demo block instances precede the real graphs, so
// generator encoder stages are sequential_2..(d+1), decoder stages
// sequential_(d+2).., and the final layer is conv2d_transpose_d.
std::vector<LayerRow> Generator::param_table() const {
    const int d = cfg_.depth;
    const int s = cfg_.image_size;
    std::vector<LayerRow> rows;

    rows.push_back({"input_1 (InputLayer)", {-1, s, s, cfg_.in_channels}, 0, "", true});

    for (int k = 0; k < d; ++k) {
        const int extent = s >> (k + 1);
        const std::string prev = (k == 0) ? "input_1" : "sequential_" + std::to_string(1 + k);
        long long p = downs_[k].conv.param_count();
        if (downs_[k].bn) p += downs_[k].bn->param_count();
        rows.push_back({"sequential_" + std::to_string(2 + k) + " (Sequential)",
                        {-1, extent, extent, enc_ch_[k]},
                        p,
                        prev + "[0][0]",
                        false});
    }

    for (int j = 0; j < d - 1; ++j) {
        const int extent = s >> (d - 1 - j);
        const int out_c = enc_ch_[d - 2 - j];
        const std::string prev =
            (j == 0) ? "sequential_" + std::to_string(1 + d) + "[0][0]"
                     : (j == 1 ? "concatenate[0][0]"
                               : "concatenate_" + std::to_string(j - 1) + "[0][0]");
        rows.push_back({"sequential_" + std::to_string(2 + d + j) + " (Sequential)",
                        {-1, extent, extent, out_c},
                        ups_[j].tconv.param_count() + ups_[j].bn.param_count(),
                        prev,
                        false});
        const std::string cat_name =
            (j == 0) ? "concatenate (Concatenate)"
                     : "concatenate_" + std::to_string(j) + " (Concatenate)";
        rows.push_back({cat_name,
                        {-1, extent, extent, 2 * out_c},
                        0,
                        "sequential_" + std::to_string(2 + d + j) + "[0][0] sequential_" +
                            std::to_string(2 + (d - 2 - j)) + "[0][0]",
                        false});
    }

    rows.push_back({"conv2d_transpose_" + std::to_string(d) + " (Conv2DTrans",
                    {-1, s, s, 1},
                    final_.param_count(),
                    "concatenate_" + std::to_string(d - 2) + "[0][0]",
                    false});
    return rows;
}

// ---------------------------------------------------------------------------
// discriminator
// ---------------------------------------------------------------------------

Discriminator::Discriminator(const ModelConfig& cfg)
    : cfg_(validated(cfg)),
      pad1_(1),
      mid_conv_(4, 4, 4 * cfg_.base_channels, 8 * cfg_.base_channels, 1, Padding::valid,
                /*use_bias=*/false),
      mid_bn_(8 * cfg_.base_channels),
      mid_act_(Act::leaky_relu, 0.2f),
      pad2_(1),
      final_conv_(4, 4, 8 * cfg_.base_channels, 1, 1, Padding::valid, /*use_bias=*/true) {
    const int b = cfg_.base_channels;
    blocks_.reserve(3);
    blocks_.emplace_back(cfg_.in_channels + 1, b, /*with_bn=*/false);
    blocks_.emplace_back(b, 2 * b, true);
    blocks_.emplace_back(2 * b, 4 * b, true);

    nn::Pcg32 rng(cfg_.seed, nn::rng_stream::kWeightInit + 1);
    for (auto& blk : blocks_) blk.conv.init(rng);
    mid_conv_.init(rng);
    final_conv_.init(rng);
}

Tensor Discriminator::forward(const Tensor& image, const Tensor& mask, Mode mode,
                              bool update_stats) {
    if (image.shape[1] != cfg_.image_size || image.shape[2] != cfg_.image_size ||
        image.shape[3] != cfg_.in_channels) {
        throw DataError("discriminator image input " + image.shape_str() + " does not match " +
                        "configured extent " + std::to_string(cfg_.image_size));
    }
    if (mask.shape[3] != 1) throw DataError("discriminator mask input must have one channel");
    Tensor x = nn::concat_channels(image, mask);
    for (auto& blk : blocks_) x = blk.forward(x, mode, update_stats);
    x = pad1_.forward(x);
    x = mid_conv_.forward(x);
    x = mid_bn_.forward(x, mode, update_stats);
    x = mid_act_.forward(x);
    x = pad2_.forward(x);
    return final_conv_.forward(x);
}

std::pair<Tensor, Tensor> Discriminator::backward(const Tensor& gy,
                                                  bool accumulate_param_grads) {
    Tensor g = final_conv_.backward(gy, accumulate_param_grads);
    g = pad2_.backward(g);
    g = mid_act_.backward(g);
    g = mid_bn_.backward(g, accumulate_param_grads);
    g = mid_conv_.backward(g, accumulate_param_grads);
    g = pad1_.backward(g);
    for (int i = static_cast<int>(blocks_.size()) - 1; i >= 0; --i) {
        g = blocks_[i].backward(g, accumulate_param_grads);
    }
    return nn::split_channels(g, cfg_.in_channels);
}

std::vector<nn::Param*> Discriminator::params() {
    std::vector<nn::Param*> out;
    for (auto& np : named_params()) out.push_back(np.param);
    return out;
}

std::vector<NamedParam> Discriminator::named_params() {
    std::vector<NamedParam> out;
    for (std::size_t i = 0; i < blocks_.size(); ++i) {
        const std::string base = "disc.block" + std::to_string(i);
        out.push_back({base + ".conv.weight", &blocks_[i].conv.weight});
        if (blocks_[i].bn) {
            out.push_back({base + ".bn.gamma", &blocks_[i].bn->gamma});
            out.push_back({base + ".bn.beta", &blocks_[i].bn->beta});
        }
    }
    out.push_back({"disc.mid.conv.weight", &mid_conv_.weight});
    out.push_back({"disc.mid.bn.gamma", &mid_bn_.gamma});
    out.push_back({"disc.mid.bn.beta", &mid_bn_.beta});
    out.push_back({"disc.final.conv.weight", &final_conv_.weight});
    out.push_back({"disc.final.conv.bias", &*final_conv_.bias});
    return out;
}

std::vector<NamedBuffer> Discriminator::named_buffers() {
    std::vector<NamedBuffer> out;
    for (std::size_t i = 0; i < blocks_.size(); ++i) {
        if (!blocks_[i].bn) continue;
        const std::string base = "disc.block" + std::to_string(i);
        out.push_back({base + ".bn.moving_mean", &blocks_[i].bn->moving_mean});
        out.push_back({base + ".bn.moving_var", &blocks_[i].bn->moving_var});
    }
    out.push_back({"disc.mid.bn.moving_mean", &mid_bn_.moving_mean});
    out.push_back({"disc.mid.bn.moving_var", &mid_bn_.moving_var});
    return out;
}

long long Discriminator::param_count() const {
    long long total = 0;
    for (const auto& blk : blocks_) {
        total += blk.conv.param_count();
        if (blk.bn) total += blk.bn->param_count();
    }
    return total + mid_conv_.param_count() + mid_bn_.param_count() + final_conv_.param_count();
}

int Discriminator::logit_extent() const { return cfg_.image_size / 8 - 2; }

std::vector<LayerRow> Discriminator::param_table() const {
    const int d = cfg_.depth;
    const int s = cfg_.image_size;
    const int b = cfg_.base_channels;
    std::vector<LayerRow> rows;

    rows.push_back({"input_image (InputLayer)", {-1, s, s, cfg_.in_channels}, 0, "", true});
    rows.push_back({"target_image (InputLayer)", {-1, s, s, 1}, 0, "", true});
    rows.push_back({"concatenate_" + std::to_string(d - 1) + " (Concatenate)",
                    {-1, s, s, cfg_.in_channels + 1},
                    0,
                    "input_image[0][0] target_image[0][0]",
                    false});

    const int seq0 = 2 + d + (d - 1);
    for (int i = 0; i < 3; ++i) {
        const int extent = s >> (i + 1);
        long long p = blocks_[i].conv.param_count();
        if (blocks_[i].bn) p += blocks_[i].bn->param_count();
        const std::string prev = (i == 0)
                                     ? "concatenate_" + std::to_string(d - 1) + "[0][0]"
                                     : "sequential_" + std::to_string(seq0 + i - 1) + "[0][0]";
        rows.push_back({"sequential_" + std::to_string(seq0 + i) + " (Sequential)",
                        {-1, extent, extent, b << i},
                        p,
                        prev,
                        false});
    }

    const int e8 = s / 8;
    rows.push_back({"zero_padding2d (ZeroPadding2D)",
                    {-1, e8 + 2, e8 + 2, 4 * b},
                    0,
                    "sequential_" + std::to_string(seq0 + 2) + "[0][0]",
                    false});
    rows.push_back({"conv2d_" + std::to_string(d + 4) + " (Conv2D)",
                    {-1, e8 - 1, e8 - 1, 8 * b},
                    mid_conv_.param_count(),
                    "zero_padding2d[0][0]",
                    false});
    rows.push_back({"batch_normalization_" + std::to_string(2 * d + 2) + " (BatchNo",
                    {-1, e8 - 1, e8 - 1, 8 * b},
                    mid_bn_.param_count(),
                    "conv2d_" + std::to_string(d + 4) + "[0][0]",
                    false});
    rows.push_back({"leaky_re_lu_" + std::to_string(d + 4) + " (LeakyReLU)",
                    {-1, e8 - 1, e8 - 1, 8 * b},
                    0,
                    "batch_normalization_" + std::to_string(2 * d + 2) + "[0][0]",
                    false});
    rows.push_back({"zero_padding2d_1 (ZeroPadding2D)",
                    {-1, e8 + 1, e8 + 1, 8 * b},
                    0,
                    "leaky_re_lu_" + std::to_string(d + 4) + "[0][0]",
                    false});
    rows.push_back({"conv2d_" + std::to_string(d + 5) + " (Conv2D)",
                    {-1, e8 - 2, e8 - 2, 1},
                    final_conv_.param_count(),
                    "zero_padding2d_1[0][0]",
                    false});
    return rows;
}

// ---------------------------------------------------------------------------
// table rendering
// ---------------------------------------------------------------------------

std::string LayerRow::shape_str() const {
    std::ostringstream os;
    if (is_input) os << "[";
    os << "(None, " << out_shape[1] << ", " << out_shape[2] << ", " << out_shape[3] << ")";
    if (is_input) os << "]";
    return os.str();
}

std::string format_param_table(const std::vector<LayerRow>& rows, long long total) {
    std::ostringstream os;
    os << "Layer (type)                     Output Shape         Param #      Connected to\n";
    os << std::string(95, '=') << "\n";
    for (const auto& r : rows) {
        std::string name = r.name;
        if (name.size() < 33) name.resize(33, ' ');
        std::string shape = r.shape_str();
        if (shape.size() < 21) shape.resize(21, ' ');
        std::string params = std::to_string(r.params);
        if (params.size() < 13) params.resize(13, ' ');
        os << name << shape << params << r.connected_to << "\n";
    }
    os << std::string(95, '=') << "\n";
    os << "Total params: " << total << "\n";
    return os.str();
}

}  // namespace p2ps::model
