#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "p2ps/imaging/image.hpp"

namespace p2ps::datasets {

/// One discovered image/mask pairing, still on disk. Multiple mask paths
/// (e.g. separate left- and right-lung files) merge by pixelwise union
/// when the pair is loaded.
struct PairPaths {
    std::string id;  // filename stem
    std::string image_path;
    std::vector<std::string> mask_paths;
    std::string source;  // dataset tag (image directory name)
};

/// A loaded pair: mask strictly binary, extents equal to the image.
struct SamplePair {
    std::string id;
    imaging::Image2D image;
    imaging::Image2D mask;
    std::string source;
};

struct ScanResult {
    std::vector<PairPaths> pairs;              // sorted lexicographically by id
    std::vector<std::string> unpaired_images;  // image files that found no mask
    std::vector<std::string> unpaired_masks;   // mask files that found no image
};

/// Walks image_dir for *.png and pairs each stem against *.png files in the
/// mask directories; a mask stem ending in strip_suffix matches the stripped
/// stem. Zero pairs is not an error at this level — diagnostics carry the
/// unpaired files. Throws IoError for unreadable directories and DataError
/// for duplicate stems within one directory.
ScanResult scan_dataset(const std::string& image_dir, const std::vector<std::string>& mask_dirs,
                        const std::string& strip_suffix = "_mask");

/// Throws DataError (with the unpaired counts) when the scan found no pairs.
const std::vector<PairPaths>& require_pairs(const ScanResult& scan);

/// Decodes the pair; masks are binarized and unioned. DataError when any
/// mask's extents differ from the image's.
SamplePair load_pair(const PairPaths& paths);

std::vector<SamplePair> load_pairs(const std::vector<PairPaths>& paths);

struct SplitSpec {
    double train_fraction = 0.8;
    std::uint64_t seed = 0;
};

/// Deterministic split: ids sorted lexicographically, shuffled by the seed,
/// first floor(train_fraction * N) become the training set. Needs >= 2 pairs.
std::pair<std::vector<PairPaths>, std::vector<PairPaths>> split(std::vector<PairPaths> pairs,
                                                                const SplitSpec& spec);

}  // namespace p2ps::datasets
