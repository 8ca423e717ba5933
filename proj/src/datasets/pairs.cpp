#include "p2ps/datasets/pairs.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>

#include "p2ps/errors.hpp"
#include "p2ps/imaging/png_io.hpp"
#include "p2ps/nn/rng.hpp"

namespace fs = std::filesystem;

namespace p2ps::datasets {

namespace {

bool has_png_extension(const fs::path& p) {
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return ext == ".png";
}

/// stem -> path for every *.png directly inside dir; DataError on stem
/// collisions (e.g. "a.png" next to "a.PNG").
std::map<std::string, std::string> stems_in(const std::string& dir,
                                            const std::string& strip_suffix) {
    std::error_code ec;
    if (!fs::is_directory(dir, ec)) throw IoError("not a readable directory: " + dir);
    std::map<std::string, std::string> out;
    for (const auto& entry : fs::directory_iterator(dir, ec)) {
        if (ec) throw IoError("cannot list " + dir + ": " + ec.message());
        if (!entry.is_regular_file() || !has_png_extension(entry.path())) continue;
        std::string stem = entry.path().stem().string();
        if (!strip_suffix.empty() && stem.size() > strip_suffix.size() &&
            stem.ends_with(strip_suffix)) {
            stem.resize(stem.size() - strip_suffix.size());
        }
        auto [it, inserted] = out.emplace(stem, entry.path().string());
        if (!inserted) {
            throw DataError("duplicate stem '" + stem + "' in " + dir + ": " + it->second +
                            " vs " + entry.path().string());
        }
    }
    if (ec) throw IoError("cannot list " + dir + ": " + ec.message());
    return out;
}

}  // namespace

ScanResult scan_dataset(const std::string& image_dir, const std::vector<std::string>& mask_dirs,
                        const std::string& strip_suffix) {
    std::map<std::string, std::string> images = stems_in(image_dir, "");
    std::vector<std::map<std::string, std::string>> masks;
    masks.reserve(mask_dirs.size());
    for (const auto& d : mask_dirs) masks.push_back(stems_in(d, strip_suffix));

    ScanResult result;
    std::string source = fs::path(image_dir).filename().string();
    if (source.empty()) source = image_dir;
    for (const auto& [stem, image_path] : images) {
        PairPaths pair;
        pair.id = stem;
        pair.image_path = image_path;
        pair.source = source;
        for (const auto& m : masks) {
            auto it = m.find(stem);
            if (it != m.end()) pair.mask_paths.push_back(it->second);
        }
        if (pair.mask_paths.empty()) {
            result.unpaired_images.push_back(image_path);
        } else {
            result.pairs.push_back(std::move(pair));
        }
    }
    for (const auto& m : masks) {
        for (const auto& [stem, mask_path] : m) {
            if (images.find(stem) == images.end()) result.unpaired_masks.push_back(mask_path);
        }
    }
    // std::map iteration already yields lexicographic id order.
    return result;
}

const std::vector<PairPaths>& require_pairs(const ScanResult& scan) {
    if (scan.pairs.empty()) {
        throw DataError("no image/mask pairs found (" +
                        std::to_string(scan.unpaired_images.size()) + " unpaired images, " +
                        std::to_string(scan.unpaired_masks.size()) + " unpaired masks)");
    }
    return scan.pairs;
}

SamplePair load_pair(const PairPaths& paths) {
    if (paths.mask_paths.empty()) throw DataError("pair '" + paths.id + "' has no mask files");
    SamplePair out;
    out.id = paths.id;
    out.source = paths.source;
    out.image = imaging::load_png(paths.image_path);
    for (const auto& mp : paths.mask_paths) {
        imaging::Image2D m = imaging::binarize(imaging::load_png(mp));
        if (!m.same_extents(out.image)) {
            throw DataError("pair '" + paths.id + "': mask " + mp + " is " +
                            std::to_string(m.width) + "x" + std::to_string(m.height) +
                            " but the image is " + std::to_string(out.image.width) + "x" +
                            std::to_string(out.image.height));
        }
        if (out.mask.size() == 0) {
            out.mask = std::move(m);
        } else {
            out.mask = imaging::union_masks(out.mask, m);
        }
    }
    return out;
}

std::vector<SamplePair> load_pairs(const std::vector<PairPaths>& paths) {
    std::vector<SamplePair> out;
    out.reserve(paths.size());
    for (const auto& p : paths) out.push_back(load_pair(p));
    return out;
}

std::pair<std::vector<PairPaths>, std::vector<PairPaths>> split(std::vector<PairPaths> pairs,
                                                                const SplitSpec& spec) {
    if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0)) {
        throw ConfigError("train_fraction must lie strictly between 0 and 1, got " +
                          std::to_string(spec.train_fraction));
    }
    if (pairs.size() < 2) {
        throw DataError("need at least 2 pairs to split, got " + std::to_string(pairs.size()));
    }
    std::sort(pairs.begin(), pairs.end(),
              [](const PairPaths& a, const PairPaths& b) { return a.id < b.id; });
    nn::Pcg32 rng(spec.seed, nn::rng_stream::kSplit);
    rng.shuffle(pairs);
    auto train_n = static_cast<std::size_t>(
        std::floor(spec.train_fraction * static_cast<double>(pairs.size())));
    std::vector<PairPaths> train(pairs.begin(), pairs.begin() + static_cast<long>(train_n));
    std::vector<PairPaths> test(pairs.begin() + static_cast<long>(train_n), pairs.end());
    return {std::move(train), std::move(test)};
}

}  // namespace p2ps::datasets
