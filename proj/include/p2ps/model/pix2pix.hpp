#pragma once

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "p2ps/model/net.hpp"
#include "p2ps/nn/adam.hpp"

namespace p2ps::model {

/// Loss decomposition of one training step.
struct StepRecord {
    long long step = 0;
    double g_total = 0, g_adv = 0, g_l1 = 0, d_loss = 0;
    std::optional<double> train_acc, val_acc;
};

struct TrainHistory {
    std::vector<StepRecord> records;
};

/// total = bce(d_fake_logits vs all-ones) + lambda * L1(fake, real).
struct GenLoss {
    double total = 0, adv = 0, l1 = 0;
};
GenLoss gen_loss(const Tensor& d_fake_logits, const Tensor& fake, const Tensor& real,
                 float lambda_l1);

/// bce(d_real vs ones) + bce(d_fake vs zeros).
double disc_loss(const Tensor& d_real_logits, const Tensor& d_fake_logits);

struct Prediction {
    Tensor raw;     // tanh output in (-1, 1)
    Tensor mask01;  // raw > 0 ? 1 : 0
};

/// Architecture header of a checkpoint, readable without building a model.
struct CheckpointInfo {
    int image_size = 0;
    int in_channels = 0;
    int base_channels = 0;
    int depth = 0;
    int dropout_up_blocks = 0;
    long long step = 0;

    /// ModelConfig with these architecture fields; training
    /// hyperparameters stay at their defaults.
    ModelConfig to_config() const;
};

CheckpointInfo peek_checkpoint(const std::string& path);

struct FitOptions {
    long long steps = 0;
    long long eval_interval = 0;        // 0 disables accuracy evaluation
    long long checkpoint_interval = 0;  // 0 disables periodic checkpoints
    std::string checkpoint_dir;         // required when checkpointing
    int max_eval_images = 16;           // cap per accuracy evaluation
    std::function<void(const StepRecord&)> on_record;
};

/// The conditional GAN pair with its two Adam optimizers and the alternating
/// update schedule. Holds the global step counter that keys dropout masks,
/// so checkpoints restore the exact stochastic state of training.
class Pix2Pix {
public:
    explicit Pix2Pix(const ModelConfig& cfg);

    /// One discriminator update (generator output held constant) followed by
    /// one generator update (discriminator frozen). Throws DivergenceError
    /// on non-finite losses.
    StepRecord train_step(const Tensor& image, const Tensor& mask);

    /// Runs train_step over batches produced by `next_batch`; evaluates
    /// pixel accuracy on the given sets every eval_interval steps and
    /// checkpoints per the options.
    TrainHistory fit(const std::function<std::pair<Tensor, Tensor>()>& next_batch,
                     const std::vector<std::pair<Tensor, Tensor>>& train_eval,
                     const std::vector<std::pair<Tensor, Tensor>>& val_eval,
                     const FitOptions& opt);

    Tensor predict_raw(const Tensor& image, Mode inference_mode = Mode::eval);
    Prediction predict_mask(const Tensor& image, Mode inference_mode = Mode::eval);

    /// Mean fraction of pixels whose thresholded prediction agrees with the
    /// reference mask (in [-1,1] encoding), micro-averaged over the set.
    double pixel_accuracy(const std::vector<std::pair<Tensor, Tensor>>& set,
                          Mode inference_mode = Mode::eval, int max_images = 0);

    void save_checkpoint(const std::string& path);
    void load_checkpoint(const std::string& path);

    long long step() const { return step_; }
    const ModelConfig& config() const { return cfg_; }
    Generator& generator() { return gen_; }
    Discriminator& discriminator() { return disc_; }
    nn::Adam& gen_optimizer() { return g_opt_; }
    nn::Adam& disc_optimizer() { return d_opt_; }
    const nn::Adam& gen_optimizer() const { return g_opt_; }
    const nn::Adam& disc_optimizer() const { return d_opt_; }

private:
    ModelConfig cfg_;
    Generator gen_;
    Discriminator disc_;
    nn::Adam g_opt_, d_opt_;
    long long step_ = 0;
};

}  // namespace p2ps::model
