#include "p2ps/cli/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "p2ps/cli/run_config.hpp"
#include "p2ps/cli/toml.hpp"
#include "p2ps/datasets/batch.hpp"
#include "p2ps/datasets/pairs.hpp"
#include "p2ps/datasets/synth.hpp"
#include "p2ps/errors.hpp"
#include "p2ps/imaging/ops.hpp"
#include "p2ps/imaging/png_io.hpp"
#include "p2ps/metrics/metrics.hpp"
#include "p2ps/model/pix2pix.hpp"

namespace fs = std::filesystem;

namespace p2ps::cli {

namespace {

// ---------------------------------------------------------------- helpers

std::string iso_utc_now() {
    std::time_t t = std::time(nullptr);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

/// The one file that carries a timestamp; everything else is reproducible
/// byte for byte from flags + seed.
void write_run_meta(const fs::path& dir, const std::string& command,
                    const std::vector<std::string>& argv) {
    nlohmann::json j;
    j["command"] = command;
    j["argv"] = argv;
    j["timestamp"] = iso_utc_now();
    std::ofstream out(dir / "run_meta.json", std::ios::trunc);
    if (!out) throw IoError("cannot write " + (dir / "run_meta.json").string());
    out << j.dump(2) << "\n";
}

void ensure_dir(const fs::path& p) {
    std::error_code ec;
    fs::create_directories(p, ec);
    if (ec) throw IoError("cannot create directory " + p.string() + ": " + ec.message());
}

std::string step_checkpoint_name(long long step) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "step_%06lld.p2ps", step);
    return buf;
}

model::Mode parse_mode(const std::string& s) {
    if (s == "eval") return model::Mode::eval;
    if (s == "train") return model::Mode::train;
    throw ConfigError("inference mode must be \"eval\" or \"train\", got \"" + s + "\"");
}

// ------------------------------------------------------- config resolution

/// Flag values captured by CLI11; only explicitly passed flags are set,
/// so resolution order is defaults < preset < config file < flags.
struct Overrides {
    std::optional<std::string> preset, config_path;
    std::optional<int> image_size, base_channels, depth, dropout_up_blocks;
    std::optional<int> batch_size, max_eval_images, clahe_tiles;
    std::optional<double> lambda_l1, lr, beta1, beta2, train_fraction, clahe_clip;
    std::optional<double> rotation_deg, width_shift, height_shift, shear, zoom_low, zoom_high;
    std::optional<long long> steps, eval_interval, checkpoint_interval, seed;
    std::optional<std::string> image_dir, strip_suffix;
    std::vector<std::string> mask_dirs;
    bool augment_on = false, augment_off = false;
    bool clahe_on = false, clahe_off = false;
    bool hflip_on = false, hflip_off = false;
    bool vflip_on = false, vflip_off = false;
    bool prefetch_on = false;
};

std::optional<bool> tri_state(bool on, bool off, const char* what) {
    if (on && off) throw ConfigError(std::string("conflicting --") + what + " flags");
    if (on) return true;
    if (off) return false;
    return std::nullopt;
}

RunConfig resolve_config(const Overrides& o) {
    RunConfig rc;
    if (o.preset) rc.apply_preset(*o.preset);
    if (o.config_path) rc.apply_table(load_toml(*o.config_path));

    if (o.image_size) rc.model.image_size = *o.image_size;
    if (o.base_channels) rc.model.base_channels = *o.base_channels;
    if (o.depth) rc.model.depth = *o.depth;
    if (o.dropout_up_blocks) rc.model.dropout_up_blocks = *o.dropout_up_blocks;
    if (o.lambda_l1) rc.model.lambda_l1 = static_cast<float>(*o.lambda_l1);
    if (o.lr) rc.model.lr = static_cast<float>(*o.lr);
    if (o.beta1) rc.model.beta1 = static_cast<float>(*o.beta1);
    if (o.beta2) rc.model.beta2 = static_cast<float>(*o.beta2);
    if (o.seed) rc.model.seed = static_cast<std::uint64_t>(*o.seed);

    if (auto v = tri_state(o.augment_on, o.augment_off, "augment")) rc.augment = *v;
    if (o.rotation_deg) rc.aug.rotation_range_deg = *o.rotation_deg;
    if (o.width_shift) rc.aug.width_shift_frac = *o.width_shift;
    if (o.height_shift) rc.aug.height_shift_frac = *o.height_shift;
    if (o.shear) rc.aug.shear_range = *o.shear;
    if (o.zoom_low) rc.aug.zoom_low = *o.zoom_low;
    if (o.zoom_high) rc.aug.zoom_high = *o.zoom_high;
    if (auto v = tri_state(o.hflip_on, o.hflip_off, "hflip")) rc.aug.horizontal_flip = *v;
    if (auto v = tri_state(o.vflip_on, o.vflip_off, "vflip")) rc.aug.vertical_flip = *v;

    if (auto v = tri_state(o.clahe_on, o.clahe_off, "clahe")) rc.clahe = *v;
    if (o.clahe_clip) rc.clahe_clip = *o.clahe_clip;
    if (o.clahe_tiles) rc.clahe_tiles = *o.clahe_tiles;

    if (o.image_dir) rc.image_dir = *o.image_dir;
    if (!o.mask_dirs.empty()) {
        std::string joined;
        for (const auto& d : o.mask_dirs) {
            if (!joined.empty()) joined += ',';
            joined += d;
        }
        rc.mask_dirs = joined;
    }
    if (o.strip_suffix) rc.strip_suffix = *o.strip_suffix;
    if (o.train_fraction) rc.train_fraction = *o.train_fraction;

    if (o.steps) rc.steps = *o.steps;
    if (o.eval_interval) rc.eval_interval = *o.eval_interval;
    if (o.checkpoint_interval) rc.checkpoint_interval = *o.checkpoint_interval;
    if (o.batch_size) rc.batch_size = *o.batch_size;
    if (o.max_eval_images) rc.max_eval_images = *o.max_eval_images;
    if (o.prefetch_on) rc.prefetch = true;
    return rc;
}

void add_model_flags(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--image-size", o.image_size, "square model resolution");
    cmd->add_option("--depth", o.depth, "encoder stages");
    cmd->add_option("--base-channels", o.base_channels, "channels of the first encoder block");
    cmd->add_option("--dropout-up-blocks", o.dropout_up_blocks,
                    "leading decoder blocks with dropout");
    cmd->add_option("--lambda", o.lambda_l1, "L1 weight in the generator loss");
    cmd->add_option("--lr", o.lr, "Adam learning rate");
    cmd->add_option("--beta1", o.beta1, "Adam beta1");
    cmd->add_option("--beta2", o.beta2, "Adam beta2");
}

void add_data_flags(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--images", o.image_dir, "directory of input PNGs");
    cmd->add_option("--masks", o.mask_dirs, "mask directory (repeat for several)");
    cmd->add_option("--strip-suffix", o.strip_suffix,
                    "suffix stripped from mask stems (default _mask)");
    cmd->add_option("--train-fraction", o.train_fraction, "train share of the split");
}

void add_preprocess_flags(CLI::App* cmd, Overrides& o) {
    cmd->add_flag("--clahe", o.clahe_on, "enable CLAHE preprocessing");
    cmd->add_flag("--no-clahe", o.clahe_off, "disable CLAHE preprocessing");
    cmd->add_option("--clahe-clip", o.clahe_clip, "CLAHE clip limit");
    cmd->add_option("--clahe-tiles", o.clahe_tiles, "CLAHE tile grid edge");
}

void add_augment_flags(CLI::App* cmd, Overrides& o) {
    cmd->add_flag("--augment", o.augment_on, "enable training augmentation");
    cmd->add_flag("--no-augment", o.augment_off, "disable training augmentation");
    cmd->add_option("--rotation", o.rotation_deg, "rotation range, degrees");
    cmd->add_option("--width-shift", o.width_shift, "horizontal shift range, fraction");
    cmd->add_option("--height-shift", o.height_shift, "vertical shift range, fraction");
    cmd->add_option("--shear", o.shear, "shear range, radians");
    cmd->add_option("--zoom-low", o.zoom_low, "zoom range lower bound");
    cmd->add_option("--zoom-high", o.zoom_high, "zoom range upper bound");
    cmd->add_flag("--hflip", o.hflip_on, "enable random horizontal flips");
    cmd->add_flag("--no-hflip", o.hflip_off, "disable random horizontal flips");
    cmd->add_flag("--vflip", o.vflip_on, "enable random vertical flips");
    cmd->add_flag("--no-vflip", o.vflip_off, "disable random vertical flips");
}

// ----------------------------------------------------------- data loading

std::vector<datasets::SamplePair> load_selection(const RunConfig& rc, const std::string& which,
                                                 std::string* dataset_tag) {
    datasets::ScanResult scan =
        datasets::scan_dataset(rc.image_dir, rc.mask_dir_list(), rc.strip_suffix);
    if (!scan.unpaired_images.empty() || !scan.unpaired_masks.empty()) {
        std::cerr << "note: excluded " << scan.unpaired_images.size() << " unpaired image(s) and "
                  << scan.unpaired_masks.size() << " unpaired mask(s)\n";
    }
    const auto& pairs = datasets::require_pairs(scan);
    if (dataset_tag != nullptr && dataset_tag->empty()) *dataset_tag = pairs.front().source;

    if (which == "all") return datasets::load_pairs(pairs);
    auto [train_paths, test_paths] =
        datasets::split(pairs, {rc.train_fraction, rc.model.seed});
    if (which == "train") return datasets::load_pairs(train_paths);
    if (which == "test") return datasets::load_pairs(test_paths);
    throw ConfigError("--split must be all, train, or test; got \"" + which + "\"");
}

datasets::BatchOptions batch_options(const RunConfig& rc, bool training) {
    datasets::BatchOptions bo;
    bo.batch_size = training ? rc.batch_size : 1;
    bo.image_size = rc.model.image_size;
    bo.apply_clahe = rc.clahe;
    bo.clahe_clip = rc.clahe_clip;
    bo.clahe_tiles = rc.clahe_tiles;
    bo.seed = rc.model.seed;
    if (training) {
        if (rc.augment) bo.augment = rc.aug;
        bo.prefetch = rc.prefetch;
    } else {
        bo.shuffle = false;
    }
    return bo;
}

/// Preprocesses a raw image exactly as the batch pipeline does.
nn::Tensor preprocess_image(const imaging::Image2D& img, const RunConfig& rc) {
    imaging::Image2D r = imaging::resize(img, rc.model.image_size, rc.model.image_size,
                                         imaging::Interp::bilinear);
    if (rc.clahe) r = imaging::clahe(r, rc.clahe_clip, rc.clahe_tiles, rc.clahe_tiles);
    return imaging::normalize(r);
}

// ---------------------------------------------------------------- commands

struct SynthFlags {
    int count = 200;
    int size = 64;
    double noise = 8.0;
    std::optional<double> min_axis, max_axis, min_elong, max_elong;
    long long seed = 0;
    std::string out;
};

int cmd_synth(const SynthFlags& f, const std::vector<std::string>& argv) {
    datasets::SynthConfig cfg;
    cfg.count = f.count;
    cfg.size = f.size;
    cfg.noise_level = f.noise;
    if (f.min_axis) cfg.min_axis_frac = *f.min_axis;
    if (f.max_axis) cfg.max_axis_frac = *f.max_axis;
    if (f.min_elong) cfg.min_elong = *f.min_elong;
    if (f.max_elong) cfg.max_elong = *f.max_elong;
    cfg.seed = static_cast<std::uint64_t>(f.seed);
    auto samples = datasets::synth_generate(cfg);  // validates before anything is written
    ensure_dir(f.out);
    datasets::synth_write(samples, cfg, f.out);
    write_run_meta(f.out, "synth", argv);
    std::cout << "wrote " << samples.size() << " image/mask pairs to " << f.out << "\n";
    return 0;
}

struct TrainFlags {
    std::string out;
    std::optional<std::string> resume;
};

int cmd_train(const Overrides& o, const TrainFlags& f, const std::vector<std::string>& argv) {
    RunConfig rc = resolve_config(o);
    if (rc.image_dir.empty() || rc.mask_dir_list().empty()) {
        throw ConfigError("train needs --images and --masks (or image_dir/mask_dirs keys)");
    }
    rc.validate();

    datasets::ScanResult scan =
        datasets::scan_dataset(rc.image_dir, rc.mask_dir_list(), rc.strip_suffix);
    if (!scan.unpaired_images.empty() || !scan.unpaired_masks.empty()) {
        std::cerr << "note: excluded " << scan.unpaired_images.size() << " unpaired image(s) and "
                  << scan.unpaired_masks.size() << " unpaired mask(s)\n";
    }
    const auto& all_pairs = datasets::require_pairs(scan);
    auto [train_paths, test_paths] =
        datasets::split(all_pairs, {rc.train_fraction, rc.model.seed});
    auto train_pairs = datasets::load_pairs(train_paths);
    auto test_pairs = datasets::load_pairs(test_paths);

    fs::path out(f.out);
    ensure_dir(out / "checkpoints");
    save_toml(rc.to_table(), (out / "config.resolved.toml").string());
    write_run_meta(out, "train", argv);

    model::Pix2Pix net(rc.model);
    if (f.resume) {
        net.load_checkpoint(*f.resume);
        std::cout << "resumed from " << *f.resume << " at step " << net.step() << "\n";
    }
    long long remaining = rc.steps - net.step();
    if (remaining < 0) remaining = 0;

    // One batch per step, so a resumed run re-enters the stream at the
    // global step; the batch sequence matches an uninterrupted run.
    datasets::BatchOptions train_bo = batch_options(rc, true);
    train_bo.start_batch = net.step();
    datasets::BatchStream train_stream(train_pairs, train_bo);
    datasets::BatchStream train_eval_stream(train_pairs, batch_options(rc, false));
    datasets::BatchStream val_eval_stream(test_pairs, batch_options(rc, false));
    auto train_eval = train_eval_stream.all_preprocessed();
    auto val_eval = val_eval_stream.all_preprocessed();

    model::TrainHistory collected;
    model::FitOptions fo;
    fo.steps = remaining;
    fo.eval_interval = rc.eval_interval;
    fo.checkpoint_interval = rc.checkpoint_interval;
    fo.checkpoint_dir = (out / "checkpoints").string();
    fo.max_eval_images = rc.max_eval_images;
    fo.on_record = [&](const model::StepRecord& rec) {
        collected.records.push_back(rec);
        if (rec.val_acc.has_value() || rec.train_acc.has_value()) {
            std::printf("step %lld  g_total %.4f  g_l1 %.4f  d %.4f  train_acc %.2f  val_acc %.2f\n",
                        rec.step, rec.g_total, rec.g_l1, rec.d_loss,
                        rec.train_acc.value_or(0.0), rec.val_acc.value_or(0.0));
            std::fflush(stdout);
        }
    };

    const std::string history_path = (out / "history.csv").string();
    try {
        net.fit([&train_stream] { return train_stream.next(); }, train_eval, val_eval, fo);
    } catch (const DivergenceError&) {
        metrics::write_history_csv(collected, history_path);  // keep partial curves
        throw;
    }
    metrics::write_history_csv(collected, history_path);
    std::string final_name = step_checkpoint_name(net.step());
    net.save_checkpoint((out / "checkpoints" / final_name).string());
    std::cout << "finished at step " << net.step() << "; final checkpoint checkpoints/"
              << final_name << "\n";
    return 0;
}

struct EvalFlags {
    std::string checkpoint;
    std::string out;
    std::string split = "all";
    std::string tag;
    std::string inference_mode = "eval";
    bool triptychs = false;
    int max_images = 0;
};

int cmd_eval(const Overrides& o, const EvalFlags& f, const std::vector<std::string>& argv) {
    RunConfig rc = resolve_config(o);
    if (rc.image_dir.empty() || rc.mask_dir_list().empty()) {
        throw ConfigError("eval needs --images and --masks (or image_dir/mask_dirs keys)");
    }
    model::CheckpointInfo info = model::peek_checkpoint(f.checkpoint);
    rc.model.image_size = info.image_size;
    rc.model.in_channels = info.in_channels;
    rc.model.base_channels = info.base_channels;
    rc.model.depth = info.depth;
    rc.model.dropout_up_blocks = info.dropout_up_blocks;
    rc.validate();
    model::Mode mode = parse_mode(f.inference_mode);

    std::string tag = f.tag;
    auto pairs = load_selection(rc, f.split, &tag);
    if (f.max_images > 0 && static_cast<int>(pairs.size()) > f.max_images) {
        pairs.resize(static_cast<std::size_t>(f.max_images));
    }

    model::Pix2Pix net(rc.model);
    net.load_checkpoint(f.checkpoint);

    std::vector<metrics::EvalPair> eval_pairs;
    eval_pairs.reserve(pairs.size());
    for (const auto& p : pairs) {
        nn::Tensor input = preprocess_image(p.image, rc);
        model::Prediction pred = net.predict_mask(input, mode);
        imaging::Image2D pred_img = imaging::tensor_to_mask(pred.raw);
        imaging::Image2D gt = imaging::resize(p.mask, rc.model.image_size, rc.model.image_size,
                                              imaging::Interp::nearest);
        eval_pairs.push_back({p.id, std::move(pred_img), std::move(gt)});
    }

    metrics::MetricsReport micro = metrics::aggregate(eval_pairs, metrics::Aggregation::micro);
    metrics::MetricsReport macro = metrics::aggregate(eval_pairs, metrics::Aggregation::macro);

    fs::path out(f.out);
    ensure_dir(out);
    save_toml(rc.to_table(), (out / "config.resolved.toml").string());
    write_run_meta(out, "eval", argv);
    metrics::write_report_json(micro, macro, (out / "report.json").string(), tag);
    metrics::write_per_image_csv(micro, (out / "per_image.csv").string());
    if (f.triptychs) metrics::write_triptychs(eval_pairs, (out / "triptychs").string());

    std::printf("dataset %s (%d image(s), %s split)\n", tag.c_str(), micro.n_images,
                f.split.c_str());
    std::printf("micro: accuracy %.2f  precision %.2f  recall %.2f  f1 %.2f  dice %.2f\n",
                micro.metrics.accuracy, micro.metrics.precision, micro.metrics.recall,
                micro.metrics.f1, micro.metrics.dice);
    std::printf("macro: accuracy %.2f  precision %.2f  recall %.2f  f1 %.2f  dice %.2f\n",
                macro.metrics.accuracy, macro.metrics.precision, macro.metrics.recall,
                macro.metrics.f1, macro.metrics.dice);
    return 0;
}

struct PredictFlags {
    std::string checkpoint;
    std::string image;
    std::string out;
    std::optional<std::string> raw_out;
    std::string inference_mode = "eval";
};

int cmd_predict(const Overrides& o, const PredictFlags& f) {
    RunConfig rc = resolve_config(o);
    model::CheckpointInfo info = model::peek_checkpoint(f.checkpoint);
    rc.model.image_size = info.image_size;
    rc.model.in_channels = info.in_channels;
    rc.model.base_channels = info.base_channels;
    rc.model.depth = info.depth;
    rc.model.dropout_up_blocks = info.dropout_up_blocks;
    rc.model.validate();
    model::Mode mode = parse_mode(f.inference_mode);

    model::Pix2Pix net(rc.model);
    net.load_checkpoint(f.checkpoint);

    imaging::Image2D img = imaging::load_png(f.image);
    nn::Tensor input = preprocess_image(img, rc);
    model::Prediction pred = net.predict_mask(input, mode);
    imaging::save_png(imaging::tensor_to_mask(pred.raw), f.out);
    if (f.raw_out) imaging::save_png(imaging::tensor_to_gray(pred.raw), *f.raw_out);
    std::cout << "wrote mask " << f.out << "\n";
    return 0;
}

struct InspectFlags {
    std::string image;
    std::optional<std::string> mask;
    std::string out;
    int previews = 0;
    long long seed = 0;
};

void write_histogram_csv(const imaging::Image2D& img, const fs::path& path) {
    auto h = imaging::histogram(img);
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << "bin,count\n";
    for (int v = 0; v < 256; ++v) out << v << "," << h[static_cast<std::size_t>(v)] << "\n";
    if (!out.good()) throw IoError("write failed for " + path.string());
}

int cmd_inspect(const Overrides& o, const InspectFlags& f,
                const std::vector<std::string>& argv) {
    RunConfig rc = resolve_config(o);
    fs::path out(f.out);
    ensure_dir(out);
    write_run_meta(out, "inspect", argv);

    imaging::Image2D img = imaging::load_png(f.image);
    const std::string img_hist = fs::path(f.image).stem().string() + "_histogram.csv";
    write_histogram_csv(img, out / img_hist);

    std::optional<imaging::Image2D> mask;
    if (f.mask) {
        mask = imaging::load_png(*f.mask);
        std::string mask_hist = fs::path(*f.mask).stem().string() + "_histogram.csv";
        if (mask_hist == img_hist) {
            mask_hist = fs::path(*f.mask).stem().string() + "_mask_histogram.csv";
        }
        write_histogram_csv(*mask, out / mask_hist);
    }

    for (int k = 0; k < f.previews; ++k) {
        nn::Pcg32 rng(static_cast<std::uint64_t>(f.seed),
                      nn::rng_stream::kAugment + static_cast<std::uint64_t>(k));
        imaging::AffineParams params = imaging::sample_affine(rng, rc.aug);
        char name[32];
        std::snprintf(name, sizeof(name), "preview_%02d.png", k);
        if (mask.has_value()) {
            auto [ai, am] = imaging::apply_affine(img, *mask, params);
            imaging::save_png(ai, (out / name).string());
            std::snprintf(name, sizeof(name), "preview_%02d_mask.png", k);
            imaging::save_png(am, (out / name).string());
        } else {
            imaging::save_png(imaging::apply_affine_one(img, params, imaging::Interp::bilinear),
                              (out / name).string());
        }
    }
    std::cout << "inspection artifacts in " << f.out << "\n";
    return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
    try {
        CLI::App app{"pix2pix chest-radiograph lung segmentation workbench"};
        app.require_subcommand(1);

        // synth ------------------------------------------------------------
        SynthFlags sf;
        auto* synth = app.add_subcommand("synth", "generate a synthetic ellipse dataset");
        synth->add_option("--count", sf.count, "number of pairs")->capture_default_str();
        synth->add_option("--size", sf.size, "square image size")->capture_default_str();
        synth->add_option("--noise", sf.noise, "uniform intensity jitter")->capture_default_str();
        synth->add_option("--min-axis", sf.min_axis, "min ellipse semi-axis, fraction of size");
        synth->add_option("--max-axis", sf.max_axis, "max ellipse semi-axis, fraction of size");
        synth->add_option("--min-elong", sf.min_elong, "min vertical elongation factor");
        synth->add_option("--max-elong", sf.max_elong, "max vertical elongation factor");
        synth->add_option("--seed", sf.seed, "generator seed")->capture_default_str();
        synth->add_option("--out", sf.out, "output dataset directory")->required();

        // train ------------------------------------------------------------
        Overrides to;
        TrainFlags tf;
        auto* train = app.add_subcommand("train", "train the conditional GAN");
        train->add_option("--config", to.config_path, "flat key = value config file");
        train->add_option("--preset", to.preset, "desk or full");
        train->add_option("--seed", to.seed, "run seed (weights, shuffles, augmentation)");
        train->add_option("--steps", to.steps, "total training steps (resume continues to this)");
        train->add_option("--eval-interval", to.eval_interval, "steps between accuracy evals");
        train->add_option("--checkpoint-interval", to.checkpoint_interval,
                          "steps between periodic checkpoints");
        train->add_option("--batch-size", to.batch_size, "training batch size");
        train->add_option("--max-eval-images", to.max_eval_images, "accuracy evaluation cap");
        train->add_flag("--prefetch", to.prefetch_on, "prepare batches on a background thread");
        train->add_option("--out", tf.out, "run output directory")->required();
        train->add_option("--resume", tf.resume, "checkpoint to continue from");
        add_model_flags(train, to);
        add_data_flags(train, to);
        add_preprocess_flags(train, to);
        add_augment_flags(train, to);

        // eval -------------------------------------------------------------
        Overrides eo;
        EvalFlags ef;
        auto* eval = app.add_subcommand("eval", "evaluate a checkpoint against a dataset");
        eval->add_option("--config", eo.config_path, "flat key = value config file");
        eval->add_option("--seed", eo.seed, "split seed (must match training for train/test)");
        eval->add_option("--checkpoint", ef.checkpoint, "model checkpoint")->required();
        eval->add_option("--out", ef.out, "report output directory")->required();
        eval->add_option("--split", ef.split, "all, train, or test")->capture_default_str();
        eval->add_option("--tag", ef.tag, "dataset label in the report");
        eval->add_option("--inference-mode", ef.inference_mode, "eval or train")
            ->capture_default_str();
        eval->add_flag("--triptychs", ef.triptychs, "write gt|pred|diff panels");
        eval->add_option("--max-images", ef.max_images, "cap evaluated images (0 = all)");
        add_data_flags(eval, eo);
        add_preprocess_flags(eval, eo);

        // predict ----------------------------------------------------------
        Overrides po;
        PredictFlags pf;
        auto* predict = app.add_subcommand("predict", "segment one image");
        predict->add_option("--config", po.config_path, "flat key = value config file");
        predict->add_option("--checkpoint", pf.checkpoint, "model checkpoint")->required();
        predict->add_option("--image", pf.image, "input PNG")->required();
        predict->add_option("--out", pf.out, "output mask PNG")->required();
        predict->add_option("--raw", pf.raw_out, "also write the raw tanh map");
        predict->add_option("--inference-mode", pf.inference_mode, "eval or train")
            ->capture_default_str();
        add_preprocess_flags(predict, po);

        // inspect ----------------------------------------------------------
        Overrides io;
        InspectFlags inf;
        auto* inspect = app.add_subcommand("inspect", "histograms and augmentation previews");
        inspect->add_option("--config", io.config_path, "flat key = value config file");
        inspect->add_option("--image", inf.image, "input PNG")->required();
        inspect->add_option("--mask", inf.mask, "matching mask PNG");
        inspect->add_option("--out", inf.out, "output directory")->required();
        inspect->add_option("--previews", inf.previews, "number of augmented previews");
        inspect->add_option("--seed", inf.seed, "preview seed");
        add_augment_flags(inspect, io);

        std::vector<const char*> argv;
        argv.reserve(args.size() + 1);
        argv.push_back("p2ps");
        for (const auto& a : args) argv.push_back(a.c_str());
        try {
            app.parse(static_cast<int>(argv.size()), argv.data());
        } catch (const CLI::CallForHelp& e) {
            return app.exit(e);
        } catch (const CLI::CallForAllHelp& e) {
            return app.exit(e);
        } catch (const CLI::ParseError& e) {
            app.exit(e);
            return 2;
        }

        if (synth->parsed()) return cmd_synth(sf, args);
        if (train->parsed()) return cmd_train(to, tf, args);
        if (eval->parsed()) return cmd_eval(eo, ef, args);
        if (predict->parsed()) return cmd_predict(po, pf);
        if (inspect->parsed()) return cmd_inspect(io, inf, args);
        return 2;  // unreachable: require_subcommand enforces one
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const DivergenceError& e) {
        std::cerr << "training diverged: " << e.what() << "\n";
        return 4;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const IoError& e) {
        std::cerr << "file error: " << e.what() << "\n";
        return 3;
    }
}

}  // namespace p2ps::cli
