#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "p2ps/datasets/pairs.hpp"
#include "p2ps/imaging/image.hpp"

namespace p2ps::datasets {

/// Filled-ellipse geometry in pixel units; rot in radians about the center.
struct EllipseSpec {
    double cx = 0, cy = 0;
    double rx = 0, ry = 0;  // horizontal / vertical semi-axes before rotation
    double rot = 0;

    bool contains(double x, double y) const;
};

/// Synthetic chest-like scenes: two dark elliptical "lungs" with a smooth
/// interior gradient on a brighter noisy body, separated by a brighter
/// vertical "mediastinum" band. Geometry ranges are fractions of the image
/// size and are chosen so the two ellipses never overlap, never touch the
/// border, and jointly cover 15-60% of the pixels.
struct SynthConfig {
    int count = 200;
    int size = 64;
    double noise_level = 8.0;     // uniform +/- intensity jitter
    double min_axis_frac = 0.13;  // horizontal semi-axis range, fraction of size
    double max_axis_frac = 0.17;
    double min_elong = 1.6;  // vertical/horizontal axis ratio
    double max_elong = 2.0;
    std::uint64_t seed = 0;

    void validate() const;  // throws ConfigError
};

struct SynthSample {
    std::string id;  // zero-padded index, e.g. "0013"
    imaging::Image2D image;
    imaging::Image2D mask;  // exact rasterization of the two ellipses
    EllipseSpec left, right;
};

/// Sample i depends only on (cfg geometry ranges, seed, i): rendering is a
/// pure function, so regenerating with the same config is bit-identical.
std::vector<SynthSample> synth_generate(const SynthConfig& cfg);

/// Writes images/NNNN.png + masks/NNNN.png + manifest.json under out_dir.
void synth_write(const std::vector<SynthSample>& samples, const SynthConfig& cfg,
                 const std::string& out_dir);

/// Convenience: generate + write + return the pairs as loaded samples.
std::vector<SamplePair> to_sample_pairs(const std::vector<SynthSample>& samples);

}  // namespace p2ps::datasets
