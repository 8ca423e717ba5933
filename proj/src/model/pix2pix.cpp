#include "p2ps/model/pix2pix.hpp"

#include <cmath>
#include <filesystem>

#include "p2ps/errors.hpp"
#include "p2ps/nn/losses.hpp"

namespace p2ps::model {

GenLoss gen_loss(const Tensor& d_fake_logits, const Tensor& fake, const Tensor& real,
                 float lambda_l1) {
    GenLoss g;
    g.adv = nn::bce_with_logits_const(d_fake_logits, 1.0f);
    g.l1 = nn::l1_loss(fake, real);
    g.total = g.adv + double(lambda_l1) * g.l1;
    return g;
}

double disc_loss(const Tensor& d_real_logits, const Tensor& d_fake_logits) {
    if (!d_real_logits.same_shape(d_fake_logits)) {
        throw std::invalid_argument("disc_loss: logit shape mismatch");
    }
    return nn::bce_with_logits_const(d_real_logits, 1.0f) +
           nn::bce_with_logits_const(d_fake_logits, 0.0f);
}

Pix2Pix::Pix2Pix(const ModelConfig& cfg)
    : cfg_(cfg),
      gen_(cfg),
      disc_(cfg),
      g_opt_(cfg.lr, cfg.beta1, cfg.beta2),
      d_opt_(cfg.lr, cfg.beta1, cfg.beta2) {
    g_opt_.attach(gen_.params());
    d_opt_.attach(disc_.params());
}

StepRecord Pix2Pix::train_step(const Tensor& image, const Tensor& mask) {
    if (image.shape[0] != mask.shape[0] || image.shape[1] != mask.shape[1] ||
        image.shape[2] != mask.shape[2] || mask.shape[3] != 1) {
        throw DataError("train_step: image " + image.shape_str() + " and mask " +
                        mask.shape_str() + " extents disagree (mask must be single-channel)");
    }
    const long long this_step = step_ + 1;
    gen_.set_dropout_step(cfg_.seed, static_cast<std::uint64_t>(this_step));

    // Generator forward once; its caches feed the generator update below.
    Tensor fake = gen_.forward(image, Mode::train, /*update_stats=*/true);

    // --- discriminator update (fake held constant) ---
    Tensor d_real = disc_.forward(image, mask, Mode::train, /*update_stats=*/true);
    const double loss_real = nn::bce_with_logits_const(d_real, 1.0f);
    disc_.backward(nn::bce_with_logits_const_grad(d_real, 1.0f), /*accumulate=*/true);

    Tensor d_fake_det = disc_.forward(image, fake, Mode::train, /*update_stats=*/true);
    const double loss_fake = nn::bce_with_logits_const(d_fake_det, 0.0f);
    disc_.backward(nn::bce_with_logits_const_grad(d_fake_det, 0.0f), /*accumulate=*/true);

    const double d_total = loss_real + loss_fake;
    d_opt_.step();

    // --- generator update (through the frozen, freshly updated critic) ---
    Tensor d_fake = disc_.forward(image, fake, Mode::train, /*update_stats=*/false);
    GenLoss g = gen_loss(d_fake, fake, mask, cfg_.lambda_l1);

    auto [g_img, g_mask] = disc_.backward(nn::bce_with_logits_const_grad(d_fake, 1.0f),
                                          /*accumulate=*/false);
    (void)g_img;  // the conditioning image is data, not a parameter path
    Tensor l1g = nn::l1_grad(fake, mask);
    for (std::size_t i = 0; i < g_mask.size(); ++i) {
        g_mask.data[i] += cfg_.lambda_l1 * l1g.data[i];
    }
    gen_.backward(g_mask);
    g_opt_.step();

    step_ = this_step;
    StepRecord rec{step_, g.total, g.adv, g.l1, d_total, std::nullopt, std::nullopt};
    if (!std::isfinite(rec.g_total) || !std::isfinite(rec.d_loss)) {
        throw DivergenceError(step_, rec.g_total, rec.g_adv, rec.g_l1, rec.d_loss);
    }
    return rec;
}

TrainHistory Pix2Pix::fit(const std::function<std::pair<Tensor, Tensor>()>& next_batch,
                          const std::vector<std::pair<Tensor, Tensor>>& train_eval,
                          const std::vector<std::pair<Tensor, Tensor>>& val_eval,
                          const FitOptions& opt) {
    TrainHistory history;
    history.records.reserve(static_cast<std::size_t>(std::max<long long>(opt.steps, 0)));

    auto checkpoint_path = [&](long long s) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "step_%06lld.p2ps", s);
        return (std::filesystem::path(opt.checkpoint_dir) / buf).string();
    };

    for (long long i = 0; i < opt.steps; ++i) {
        auto [image, mask] = next_batch();
        StepRecord rec = train_step(image, mask);

        if (opt.eval_interval > 0 && rec.step % opt.eval_interval == 0) {
            if (!train_eval.empty()) {
                rec.train_acc = pixel_accuracy(train_eval, Mode::eval, opt.max_eval_images);
            }
            if (!val_eval.empty()) {
                rec.val_acc = pixel_accuracy(val_eval, Mode::eval, opt.max_eval_images);
            }
        }
        if (opt.checkpoint_interval > 0 && !opt.checkpoint_dir.empty() &&
            rec.step % opt.checkpoint_interval == 0) {
            save_checkpoint(checkpoint_path(rec.step));
        }
        if (opt.on_record) opt.on_record(rec);
        history.records.push_back(rec);
    }
    return history;
}

Tensor Pix2Pix::predict_raw(const Tensor& image, Mode inference_mode) {
    gen_.set_dropout_step(cfg_.seed, static_cast<std::uint64_t>(step_));
    return gen_.forward(image, inference_mode, /*update_stats=*/false);
}

Prediction Pix2Pix::predict_mask(const Tensor& image, Mode inference_mode) {
    Prediction p;
    p.raw = predict_raw(image, inference_mode);
    p.mask01 = Tensor(p.raw.shape);
    for (std::size_t i = 0; i < p.raw.size(); ++i) {
        p.mask01.data[i] = p.raw.data[i] > 0.0f ? 1.0f : 0.0f;
    }
    return p;
}

double Pix2Pix::pixel_accuracy(const std::vector<std::pair<Tensor, Tensor>>& set,
                               Mode inference_mode, int max_images) {
    if (set.empty()) throw DataError("pixel_accuracy: empty evaluation set");
    std::size_t n = set.size();
    if (max_images > 0) n = std::min<std::size_t>(n, static_cast<std::size_t>(max_images));
    long long agree = 0, total = 0;
    for (std::size_t i = 0; i < n; ++i) {
        Tensor raw = predict_raw(set[i].first, inference_mode);
        const Tensor& gt = set[i].second;
        if (!raw.same_shape(gt)) {
            throw DataError("pixel_accuracy: prediction " + raw.shape_str() + " vs mask " +
                            gt.shape_str());
        }
        for (std::size_t k = 0; k < raw.size(); ++k) {
            agree += ((raw.data[k] > 0.0f) == (gt.data[k] > 0.0f)) ? 1 : 0;
        }
        total += static_cast<long long>(raw.size());
    }
    return double(agree) / double(total);
}

}  // namespace p2ps::model
