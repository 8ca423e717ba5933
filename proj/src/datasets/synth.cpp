#include "p2ps/datasets/synth.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "p2ps/errors.hpp"
#include "p2ps/imaging/png_io.hpp"
#include "p2ps/nn/rng.hpp"

namespace fs = std::filesystem;

namespace p2ps::datasets {

namespace {

/// Squared normalized elliptical radius: <= 1 means inside.
double radius2(const EllipseSpec& e, double x, double y) {
    double dx = x - e.cx;
    double dy = y - e.cy;
    double c = std::cos(e.rot), s = std::sin(e.rot);
    double u = c * dx + s * dy;
    double v = -s * dx + c * dy;
    return (u / e.rx) * (u / e.rx) + (v / e.ry) * (v / e.ry);
}

std::string pad4(int i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d", i);
    return buf;
}

}  // namespace

bool EllipseSpec::contains(double x, double y) const { return radius2(*this, x, y) <= 1.0; }

void SynthConfig::validate() const {
    if (count < 1) throw ConfigError("synth count must be >= 1, got " + std::to_string(count));
    if (size < 32) throw ConfigError("synth size must be >= 32, got " + std::to_string(size));
    if (noise_level < 0.0) throw ConfigError("synth noise_level must be nonnegative");
    if (!(min_axis_frac > 0.0 && min_axis_frac <= max_axis_frac && max_axis_frac <= 0.18)) {
        throw ConfigError("synth axis fractions must satisfy 0 < min <= max <= 0.18");
    }
    if (!(min_elong >= 1.0 && min_elong <= max_elong && max_elong <= 2.2)) {
        throw ConfigError("synth elongation must satisfy 1 <= min <= max <= 2.2");
    }
}

std::vector<SynthSample> synth_generate(const SynthConfig& cfg) {
    cfg.validate();
    const double s = cfg.size;
    std::vector<SynthSample> out;
    out.reserve(static_cast<std::size_t>(cfg.count));
    for (int i = 0; i < cfg.count; ++i) {
        nn::Pcg32 rng(cfg.seed, nn::rng_stream::kSynth + static_cast<std::uint64_t>(i));
        SynthSample sample;
        sample.id = pad4(i);

        // Geometry draws come first and in a fixed order; the center/axis
        // ranges keep both ellipses interior and disjoint (the separating
        // band at x = s/2 is never reached even at maximal axes/rotation).
        auto draw_lung = [&](double cx_lo, double cx_hi) {
            EllipseSpec e;
            e.cx = rng.uniform(cx_lo, cx_hi) * s;
            e.cy = rng.uniform(0.47, 0.53) * s;
            e.rx = rng.uniform(cfg.min_axis_frac, cfg.max_axis_frac) * s;
            e.ry = e.rx * rng.uniform(cfg.min_elong, cfg.max_elong);
            e.rot = rng.uniform(-0.12, 0.12);
            return e;
        };
        sample.left = draw_lung(0.25, 0.29);
        sample.right = draw_lung(0.71, 0.75);

        sample.image = imaging::Image2D(cfg.size, cfg.size);
        sample.mask = imaging::Image2D(cfg.size, cfg.size);
        for (int y = 0; y < cfg.size; ++y) {
            for (int x = 0; x < cfg.size; ++x) {
                double base = 175.0 + 20.0 * y / (s - 1.0);  // body, brightening downward
                double band = std::abs(x - 0.5 * s) / (0.07 * s);
                if (band < 1.0) base = std::max(base, 225.0 - 12.0 * band);
                double tl = radius2(sample.left, x, y);
                double tr = radius2(sample.right, x, y);
                bool inside = tl <= 1.0 || tr <= 1.0;
                if (inside) base = 70.0 + 55.0 * std::min(tl, tr);  // dark core, soft rim
                double noise = cfg.noise_level * rng.uniform(-1.0, 1.0);
                double v = std::floor(base + noise + 0.5);
                sample.image.at(x, y) = static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
                sample.mask.at(x, y) = inside ? 255 : 0;
            }
        }
        out.push_back(std::move(sample));
    }
    return out;
}

void synth_write(const std::vector<SynthSample>& samples, const SynthConfig& cfg,
                 const std::string& out_dir) {
    fs::path root(out_dir);
    std::error_code ec;
    fs::create_directories(root / "images", ec);
    fs::create_directories(root / "masks", ec);
    if (ec) throw IoError("cannot create " + out_dir + ": " + ec.message());

    nlohmann::json manifest;
    manifest["count"] = cfg.count;
    manifest["size"] = cfg.size;
    manifest["noise_level"] = cfg.noise_level;
    manifest["min_axis_frac"] = cfg.min_axis_frac;
    manifest["max_axis_frac"] = cfg.max_axis_frac;
    manifest["min_elong"] = cfg.min_elong;
    manifest["max_elong"] = cfg.max_elong;
    manifest["seed"] = cfg.seed;
    manifest["samples"] = nlohmann::json::array();
    auto ellipse_json = [](const EllipseSpec& e) {
        return nlohmann::json{{"cx", e.cx}, {"cy", e.cy}, {"rx", e.rx}, {"ry", e.ry},
                              {"rot", e.rot}};
    };
    for (const auto& sample : samples) {
        imaging::save_png(sample.image, (root / "images" / (sample.id + ".png")).string());
        imaging::save_png(sample.mask, (root / "masks" / (sample.id + ".png")).string());
        manifest["samples"].push_back({{"id", sample.id},
                                       {"left", ellipse_json(sample.left)},
                                       {"right", ellipse_json(sample.right)}});
    }
    std::ofstream mf(root / "manifest.json");
    if (!mf) throw IoError("cannot write manifest.json under " + out_dir);
    mf << manifest.dump(2) << "\n";
    if (!mf.good()) throw IoError("write failed for manifest.json under " + out_dir);
}

std::vector<SamplePair> to_sample_pairs(const std::vector<SynthSample>& samples) {
    std::vector<SamplePair> out;
    out.reserve(samples.size());
    for (const auto& s : samples) out.push_back({s.id, s.image, s.mask, "synth"});
    return out;
}

}  // namespace p2ps::datasets
