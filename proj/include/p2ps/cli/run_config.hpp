#pragma once

#include <string>
#include <vector>

#include "p2ps/cli/toml.hpp"
#include "p2ps/imaging/augment.hpp"
#include "p2ps/model/config.hpp"

namespace p2ps::cli {

/// Every knob of a training/evaluation run, serializable to the flat
/// config format so any run can be reproduced from its archived copy.
/// Defaults describe the full-resolution pipeline; the "desk" preset
/// switches to the small fast profile.
struct RunConfig {
    model::ModelConfig model;  // includes the run seed

    bool augment = true;
    imaging::AugmentConfig aug;

    bool clahe = false;
    double clahe_clip = 2.0;
    int clahe_tiles = 8;

    std::string image_dir;
    std::string mask_dirs;  // comma-separated list
    std::string strip_suffix = "_mask";
    double train_fraction = 0.8;

    long long steps = 20000;
    long long eval_interval = 200;
    long long checkpoint_interval = 2000;
    int batch_size = 1;
    int max_eval_images = 16;
    bool prefetch = false;

    /// "desk" (64px, depth 6, base 16, 2000 steps) or "full" (the defaults).
    void apply_preset(const std::string& name);

    /// Unknown keys throw ConfigError naming the key.
    void apply_table(const TomlTable& table);

    TomlTable to_table() const;

    std::vector<std::string> mask_dir_list() const;

    void validate() const;
};

}  // namespace p2ps::cli
