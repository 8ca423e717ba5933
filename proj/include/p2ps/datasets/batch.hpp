#pragma once

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <thread>
#include <utility>
#include <vector>

#include "p2ps/datasets/pairs.hpp"
#include "p2ps/imaging/augment.hpp"
#include "p2ps/nn/tensor.hpp"

namespace p2ps::datasets {

struct BatchOptions {
    int batch_size = 1;
    int image_size = 256;  // square resize target
    bool apply_clahe = false;
    double clahe_clip = 2.0;
    int clahe_tiles = 8;
    std::optional<imaging::AugmentConfig> augment;  // nullopt: no augmentation
    bool shuffle = true;                            // false: fixed lexicographic order
    std::uint64_t seed = 0;
    bool prefetch = false;      // background-thread pipeline; output is identical
    long long start_batch = 0;  // resume point: first batch index to emit

    void validate() const;  // throws ConfigError
};

/// Deterministic batch iterator. Preprocessing (resize -> optional CLAHE ->
/// normalize) happens once up front; each epoch reshuffles by (seed, epoch)
/// and each emitted sample draws its augmentation from
/// (seed, epoch * n_samples + slot), so the stream is a pure function of the
/// options regardless of prefetching.
class BatchStream {
public:
    BatchStream(std::vector<SamplePair> pairs, BatchOptions opt);
    ~BatchStream();

    BatchStream(const BatchStream&) = delete;
    BatchStream& operator=(const BatchStream&) = delete;

    /// Next (image, mask) batch; wraps to the next epoch automatically.
    std::pair<nn::Tensor, nn::Tensor> next();

    int n_samples() const { return static_cast<int>(images_.size()); }
    int batches_per_epoch() const;
    long long epoch() const { return next_batch_ / batches_per_epoch(); }

    /// Straight preprocessing of every sample, unshuffled and unaugmented
    /// (for evaluation sets).
    std::vector<std::pair<nn::Tensor, nn::Tensor>> all_preprocessed() const;

private:
    std::pair<nn::Tensor, nn::Tensor> make_sample(long long position) const;
    std::pair<nn::Tensor, nn::Tensor> make_batch(long long batch_index) const;

    BatchOptions opt_;
    std::vector<imaging::Image2D> images_;  // preprocessed, pre-normalize
    std::vector<imaging::Image2D> masks_;
    long long next_batch_ = 0;  // batches handed out so far

    // Prefetch machinery (used only when opt_.prefetch).
    void prefetch_loop();
    std::unique_ptr<std::thread> worker_;
    std::mutex mu_;
    std::condition_variable cv_;
    std::deque<std::pair<nn::Tensor, nn::Tensor>> queue_;
    bool stop_ = false;
    static constexpr std::size_t kQueueDepth = 4;
};

}  // namespace p2ps::datasets
