#include "p2ps/datasets/batch.hpp"

#include <algorithm>
#include <numeric>

#include "p2ps/errors.hpp"
#include "p2ps/imaging/ops.hpp"
#include "p2ps/nn/rng.hpp"

namespace p2ps::datasets {

void BatchOptions::validate() const {
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (image_size < 1) throw ConfigError("image_size must be >= 1");
    if (start_batch < 0) throw ConfigError("start_batch must be >= 0");
    if (apply_clahe && (clahe_clip <= 0.0 || clahe_tiles < 1)) {
        throw ConfigError("clahe parameters must be positive");
    }
    if (augment.has_value()) augment->validate();
}

BatchStream::BatchStream(std::vector<SamplePair> pairs, BatchOptions opt) : opt_(opt) {
    opt_.validate();
    if (pairs.empty()) throw DataError("batch stream needs at least one pair");
    std::sort(pairs.begin(), pairs.end(),
              [](const SamplePair& a, const SamplePair& b) { return a.id < b.id; });
    images_.reserve(pairs.size());
    masks_.reserve(pairs.size());
    for (auto& p : pairs) {
        imaging::Image2D img =
            imaging::resize(p.image, opt_.image_size, opt_.image_size, imaging::Interp::bilinear);
        if (opt_.apply_clahe) {
            img = imaging::clahe(img, opt_.clahe_clip, opt_.clahe_tiles, opt_.clahe_tiles);
        }
        imaging::Image2D mask =
            imaging::resize(p.mask, opt_.image_size, opt_.image_size, imaging::Interp::nearest);
        images_.push_back(std::move(img));
        masks_.push_back(std::move(mask));
    }
    next_batch_ = opt_.start_batch;
    if (opt_.prefetch) {
        worker_ = std::make_unique<std::thread>([this] { prefetch_loop(); });
    }
}

BatchStream::~BatchStream() {
    if (worker_) {
        {
            std::lock_guard<std::mutex> lk(mu_);
            stop_ = true;
        }
        cv_.notify_all();
        worker_->join();
    }
}

int BatchStream::batches_per_epoch() const {
    int n = n_samples();
    return (n + opt_.batch_size - 1) / opt_.batch_size;
}

std::pair<nn::Tensor, nn::Tensor> BatchStream::make_sample(long long position) const {
    int n = n_samples();
    long long epoch = position / n;
    int slot = static_cast<int>(position % n);

    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    if (opt_.shuffle) {
        nn::Pcg32 rng(opt_.seed, nn::rng_stream::kShuffle + static_cast<std::uint64_t>(epoch));
        rng.shuffle(order);
    }
    int idx = order[static_cast<std::size_t>(slot)];

    if (opt_.augment.has_value()) {
        nn::Pcg32 rng(opt_.seed, nn::rng_stream::kAugment + static_cast<std::uint64_t>(position));
        imaging::AffineParams params = imaging::sample_affine(rng, *opt_.augment);
        auto [img, mask] = imaging::apply_affine(images_[idx], masks_[idx], params);
        return {imaging::normalize(img), imaging::normalize(mask)};
    }
    return {imaging::normalize(images_[idx]), imaging::normalize(masks_[idx])};
}

std::pair<nn::Tensor, nn::Tensor> BatchStream::make_batch(long long batch_index) const {
    int n = n_samples();
    int bpe = batches_per_epoch();
    long long epoch = batch_index / bpe;
    int first_slot = static_cast<int>(batch_index % bpe) * opt_.batch_size;
    int count = std::min(opt_.batch_size, n - first_slot);

    int s = opt_.image_size;
    nn::Tensor images(count, s, s, 1);
    nn::Tensor masks(count, s, s, 1);
    std::size_t plane = static_cast<std::size_t>(s) * s;
    for (int k = 0; k < count; ++k) {
        auto [img, mask] = make_sample(epoch * n + first_slot + k);
        std::copy(img.data.begin(), img.data.end(),
                  images.data.begin() + static_cast<long>(k * plane));
        std::copy(mask.data.begin(), mask.data.end(),
                  masks.data.begin() + static_cast<long>(k * plane));
    }
    return {std::move(images), std::move(masks)};
}

std::pair<nn::Tensor, nn::Tensor> BatchStream::next() {
    if (!opt_.prefetch) return make_batch(next_batch_++);
    std::unique_lock<std::mutex> lk(mu_);
    cv_.wait(lk, [&] { return !queue_.empty(); });
    auto batch = std::move(queue_.front());
    queue_.pop_front();
    ++next_batch_;
    cv_.notify_all();
    return batch;
}

std::vector<std::pair<nn::Tensor, nn::Tensor>> BatchStream::all_preprocessed() const {
    std::vector<std::pair<nn::Tensor, nn::Tensor>> out;
    out.reserve(images_.size());
    for (std::size_t i = 0; i < images_.size(); ++i) {
        out.emplace_back(imaging::normalize(images_[i]), imaging::normalize(masks_[i]));
    }
    return out;
}

void BatchStream::prefetch_loop() {
    long long produced = opt_.start_batch;
    for (;;) {
        // Batches are pure functions of their index, so producing ahead of
        // the consumer cannot change the stream.
        auto batch = make_batch(produced);
        std::unique_lock<std::mutex> lk(mu_);
        cv_.wait(lk, [&] { return stop_ || queue_.size() < kQueueDepth; });
        if (stop_) return;
        queue_.push_back(std::move(batch));
        ++produced;
        cv_.notify_all();
    }
}

}  // namespace p2ps::datasets
