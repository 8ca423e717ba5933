#pragma once

#include <cstdint>

namespace p2ps::model {

/// Hyperparameters of the generator/discriminator pair and its optimizer.
/// Defaults reproduce the 256x256 architecture tables; the desk-scale
/// preset (image_size 64, depth 6, base_channels 16) is the same network
/// three octaves smaller.
struct ModelConfig {
    int image_size = 256;
    int in_channels = 1;
    int base_channels = 64;
    int depth = 8;  // encoder stages; bottleneck extent = image_size / 2^depth
    float lambda_l1 = 100.0f;
    float lr = 2e-4f;
    float beta1 = 0.5f;
    float beta2 = 0.999f;
    int dropout_up_blocks = 3;
    std::uint64_t seed = 0;

    /// Throws ConfigError on violations (extent/depth arithmetic, ranges).
    void validate() const;

    int bottleneck_extent() const { return image_size >> depth; }

    /// Hash of the architecture-defining fields; stored in checkpoints so a
    /// mismatched load fails fast with a named field instead of garbage.
    std::uint64_t fingerprint() const;
};

}  // namespace p2ps::model
