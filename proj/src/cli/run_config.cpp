#include "p2ps/cli/run_config.hpp"

#include <cmath>
#include <limits>

#include "p2ps/errors.hpp"

namespace p2ps::cli {

namespace {

long long want_int(const std::string& key, const TomlValue& v) {
    if (!std::holds_alternative<long long>(v)) {
        throw ConfigError("config key '" + key + "' must be an integer");
    }
    return std::get<long long>(v);
}

int want_int32(const std::string& key, const TomlValue& v) {
    long long n = want_int(key, v);
    if (n < std::numeric_limits<int>::min() || n > std::numeric_limits<int>::max()) {
        throw ConfigError("config key '" + key + "' is out of range");
    }
    return static_cast<int>(n);
}

double want_float(const std::string& key, const TomlValue& v) {
    if (std::holds_alternative<double>(v)) return std::get<double>(v);
    if (std::holds_alternative<long long>(v)) {
        return static_cast<double>(std::get<long long>(v));  // 100 is a fine float
    }
    throw ConfigError("config key '" + key + "' must be a number");
}

bool want_bool(const std::string& key, const TomlValue& v) {
    if (!std::holds_alternative<bool>(v)) {
        throw ConfigError("config key '" + key + "' must be true or false");
    }
    return std::get<bool>(v);
}

std::string want_string(const std::string& key, const TomlValue& v) {
    if (!std::holds_alternative<std::string>(v)) {
        throw ConfigError("config key '" + key + "' must be a quoted string");
    }
    return std::get<std::string>(v);
}

}  // namespace

void RunConfig::apply_preset(const std::string& name) {
    if (name == "full") {
        *this = RunConfig{};  // the defaults are the full-resolution profile
        return;
    }
    if (name == "desk") {
        *this = RunConfig{};
        model.image_size = 64;
        model.depth = 6;
        model.base_channels = 16;
        steps = 2000;
        eval_interval = 100;
        checkpoint_interval = 500;
        return;
    }
    throw ConfigError("unknown preset '" + name + "' (expected \"desk\" or \"full\")");
}

void RunConfig::apply_table(const TomlTable& table) {
    for (const auto& [key, value] : table) {
        if (key == "image_size") {
            model.image_size = want_int32(key, value);
        } else if (key == "in_channels") {
            model.in_channels = want_int32(key, value);
        } else if (key == "base_channels") {
            model.base_channels = want_int32(key, value);
        } else if (key == "depth") {
            model.depth = want_int32(key, value);
        } else if (key == "lambda_l1") {
            model.lambda_l1 = static_cast<float>(want_float(key, value));
        } else if (key == "lr") {
            model.lr = static_cast<float>(want_float(key, value));
        } else if (key == "beta1") {
            model.beta1 = static_cast<float>(want_float(key, value));
        } else if (key == "beta2") {
            model.beta2 = static_cast<float>(want_float(key, value));
        } else if (key == "dropout_up_blocks") {
            model.dropout_up_blocks = want_int32(key, value);
        } else if (key == "seed") {
            model.seed = static_cast<std::uint64_t>(want_int(key, value));
        } else if (key == "augment") {
            augment = want_bool(key, value);
        } else if (key == "rotation_deg") {
            aug.rotation_range_deg = want_float(key, value);
        } else if (key == "width_shift") {
            aug.width_shift_frac = want_float(key, value);
        } else if (key == "height_shift") {
            aug.height_shift_frac = want_float(key, value);
        } else if (key == "shear") {
            aug.shear_range = want_float(key, value);
        } else if (key == "zoom_low") {
            aug.zoom_low = want_float(key, value);
        } else if (key == "zoom_high") {
            aug.zoom_high = want_float(key, value);
        } else if (key == "hflip") {
            aug.horizontal_flip = want_bool(key, value);
        } else if (key == "vflip") {
            aug.vertical_flip = want_bool(key, value);
        } else if (key == "clahe") {
            clahe = want_bool(key, value);
        } else if (key == "clahe_clip") {
            clahe_clip = want_float(key, value);
        } else if (key == "clahe_tiles") {
            clahe_tiles = want_int32(key, value);
        } else if (key == "image_dir") {
            image_dir = want_string(key, value);
        } else if (key == "mask_dirs") {
            mask_dirs = want_string(key, value);
        } else if (key == "strip_suffix") {
            strip_suffix = want_string(key, value);
        } else if (key == "train_fraction") {
            train_fraction = want_float(key, value);
        } else if (key == "steps") {
            steps = want_int(key, value);
        } else if (key == "eval_interval") {
            eval_interval = want_int(key, value);
        } else if (key == "checkpoint_interval") {
            checkpoint_interval = want_int(key, value);
        } else if (key == "batch_size") {
            batch_size = want_int32(key, value);
        } else if (key == "max_eval_images") {
            max_eval_images = want_int32(key, value);
        } else if (key == "prefetch") {
            prefetch = want_bool(key, value);
        } else {
            throw ConfigError("unknown config key '" + key + "'");
        }
    }
}

TomlTable RunConfig::to_table() const {
    TomlTable t;
    t["image_size"] = static_cast<long long>(model.image_size);
    t["in_channels"] = static_cast<long long>(model.in_channels);
    t["base_channels"] = static_cast<long long>(model.base_channels);
    t["depth"] = static_cast<long long>(model.depth);
    t["lambda_l1"] = static_cast<double>(model.lambda_l1);
    t["lr"] = static_cast<double>(model.lr);
    t["beta1"] = static_cast<double>(model.beta1);
    t["beta2"] = static_cast<double>(model.beta2);
    t["dropout_up_blocks"] = static_cast<long long>(model.dropout_up_blocks);
    t["seed"] = static_cast<long long>(model.seed);
    t["augment"] = augment;
    t["rotation_deg"] = aug.rotation_range_deg;
    t["width_shift"] = aug.width_shift_frac;
    t["height_shift"] = aug.height_shift_frac;
    t["shear"] = aug.shear_range;
    t["zoom_low"] = aug.zoom_low;
    t["zoom_high"] = aug.zoom_high;
    t["hflip"] = aug.horizontal_flip;
    t["vflip"] = aug.vertical_flip;
    t["clahe"] = clahe;
    t["clahe_clip"] = clahe_clip;
    t["clahe_tiles"] = static_cast<long long>(clahe_tiles);
    t["image_dir"] = image_dir;
    t["mask_dirs"] = mask_dirs;
    t["strip_suffix"] = strip_suffix;
    t["train_fraction"] = train_fraction;
    t["steps"] = steps;
    t["eval_interval"] = eval_interval;
    t["checkpoint_interval"] = checkpoint_interval;
    t["batch_size"] = static_cast<long long>(batch_size);
    t["max_eval_images"] = static_cast<long long>(max_eval_images);
    t["prefetch"] = prefetch;
    return t;
}

std::vector<std::string> RunConfig::mask_dir_list() const {
    std::vector<std::string> out;
    std::string cur;
    for (char c : mask_dirs) {
        if (c == ',') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

void RunConfig::validate() const {
    model.validate();
    if (augment) aug.validate();
    if (clahe && (clahe_clip <= 0.0 || clahe_tiles < 1)) {
        throw ConfigError("clahe_clip must be positive and clahe_tiles >= 1");
    }
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw ConfigError("train_fraction must lie strictly between 0 and 1");
    }
    if (steps < 0) throw ConfigError("steps must be nonnegative");
    if (eval_interval < 0 || checkpoint_interval < 0) {
        throw ConfigError("intervals must be nonnegative");
    }
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (max_eval_images < 1) throw ConfigError("max_eval_images must be >= 1");
}

}  // namespace p2ps::cli
