#include "pqm/training/trainer.hpp"

#include "pqm/core.hpp"
#include "pqm/training/checkpoint.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <ostream>

namespace pqm::training {

void TrainerConfig::validate() const {
    const auto fail = [](const std::string& m) { throw std::invalid_argument("trainer config: " + m); };
    if (n_aug < 1) fail("n_aug must be positive");
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) fail("learning_rate must be finite and >= 0");
    if (patience < 0) fail("patience must be >= 0");
    if (max_epochs < 1) fail("max_epochs must be positive");
    if (batch_size < 1) fail("batch_size must be positive");
    if (max_steps < 0) fail("max_steps must be >= 0");
}

NonFiniteLossError::NonFiniteLossError(const std::string& what, std::vector<std::string> provenance)
    : std::runtime_error([&] {
          std::string msg = what + "; batch:";
          for (const auto& p : provenance) msg += " " + p;
          return msg;
      }()),
      provenance_(std::move(provenance)) {}

BatchTensors batch_tensors(std::span<const AugmentedItem> items, const model::ModelConfig& cfg) {
    if (items.empty()) throw std::invalid_argument("empty batch");
    std::vector<torch::Tensor> images, masks, quality, edges, unchecked, gt;
    for (const auto& it : items) {
        if (it.image.height() != cfg.image_size || it.image.width() != cfg.image_size)
            throw std::invalid_argument("item " + it.sample_id + " is " + to_string(it.image.size()) +
                                        ", model expects " + std::to_string(cfg.image_size));
        images.push_back(model::image_tensor(it.image, cfg));
        const auto m = model::mask_tensor(it.unchecked);
        masks.push_back(m);
        unchecked.push_back(m.squeeze(0));
        gt.push_back(model::mask_tensor(it.gt).squeeze(0));
        quality.push_back(model::quality_target(it.quality));
        edges.push_back(model::edge_target(it.edges));
    }
    BatchTensors b;
    b.images = torch::stack(images);
    b.masks = torch::stack(masks);
    b.targets.quality = torch::stack(quality);
    b.targets.edges = torch::stack(edges);
    b.targets.unchecked = torch::stack(unchecked);
    b.targets.gt = torch::stack(gt);
    return b;
}

Trainer::Trainer(model::QualityAssessor model, TrainerConfig cfg, losses::LossConfig loss_cfg)
    : model_(std::move(model)), cfg_(cfg), loss_cfg_(loss_cfg), rng_(derive_seed(cfg.seed, 0x5eed)) {
    cfg_.validate();
    loss_cfg_.weights.validate();
    optimizer_ = std::make_unique<torch::optim::Adam>(model_->parameters(),
                                                      torch::optim::AdamOptions(cfg_.learning_rate));
}

losses::LossBreakdown Trainer::train_step(const AugmentedBatch& batch) {
    model_->train();
    const BatchTensors b = batch_tensors(batch.items, model_->config());
    const auto out = model_->forward(b.images, b.masks);
    losses::LossTerms terms;
    try {
        terms = losses::compute_losses(out.assessment, out.edges.fused, b.targets, loss_cfg_);
    } catch (const std::invalid_argument& e) {
        throw NonFiniteLossError(std::string("step ") + std::to_string(step_ + 1) + ": " + e.what(),
                                 batch.provenance());
    }
    auto total = terms.total();
    if (!std::isfinite(total.item<double>()))
        throw NonFiniteLossError("step " + std::to_string(step_ + 1) + ": total loss is not finite",
                                 batch.provenance());
    optimizer_->zero_grad();
    total.backward();
    optimizer_->step();
    ++step_;
    return terms.breakdown();
}

Assessment assess(model::QualityAssessor& model, const RgbImage& image, const BinaryMask& unchecked) {
    const auto& cfg = model->config();
    if (image.height() != cfg.image_size || image.width() != cfg.image_size)
        throw std::invalid_argument("image is " + to_string(image.size()) + ", model expects " +
                                    std::to_string(cfg.image_size) + "x" + std::to_string(cfg.image_size));
    require_same_size(image.size(), unchecked.size(), "assess");
    torch::NoGradGuard no_grad;
    model->eval();
    const auto out = model->forward(model::image_tensor(image, cfg).unsqueeze(0),
                                    model::mask_tensor(unchecked).unsqueeze(0));
    return {model::quality_from_logits(out.assessment[0]), model::edges_from_logits(out.edges.fused[0])};
}

std::vector<AugmentedItem> evaluation_items(std::span<const data::SampleTriplet> samples,
                                            std::span<const MaskSourcePtr> sources, std::uint64_t seed) {
    const ProvidedMaskSource provided;
    std::vector<AugmentedItem> items;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto& s = samples[i];
        const std::uint64_t item_seed = derive_seed(seed, i, 0xe7a1);
        if (s.unchecked) {
            items.push_back(augment_one(s, Transform::Identity, provided, item_seed));
        } else {
            if (sources.empty()) throw std::invalid_argument("sample " + s.id + " has no unchecked mask and no source");
            const auto& src = *sources[item_seed % sources.size()];
            items.push_back(augment_one(s, Transform::Identity, src, item_seed));
        }
    }
    return items;
}

metrics::AssessmentReport evaluate(model::QualityAssessor& model, std::span<const AugmentedItem> items, int chunk) {
    torch::NoGradGuard no_grad;
    model->eval();
    metrics::ReportAccumulator acc;
    for (std::size_t start = 0; start < items.size(); start += static_cast<std::size_t>(chunk)) {
        const auto part = items.subspan(start, std::min<std::size_t>(chunk, items.size() - start));
        const auto b = batch_tensors(part, model->config());
        const auto out = model->forward(b.images, b.masks);
        for (std::size_t i = 0; i < part.size(); ++i)
            acc.add(model::quality_from_logits(out.assessment[static_cast<int64_t>(i)]), part[i].quality);
    }
    return acc.result();
}

double monitored_value(const metrics::AssessmentReport& r, Monitor m) {
    return m == Monitor::MeanF1 ? r.mf1 : r.miou;
}

EarlyStopping::EarlyStopping(int patience) : patience_(patience) {
    if (patience < 0) throw std::invalid_argument("patience must be >= 0");
}

bool EarlyStopping::update(double score) {
    ++epochs_;
    if (epochs_ == 1 || score > best_) {
        best_ = score;
        best_epoch_ = epochs_;
        since_improvement_ = 0;
        return true;
    }
    ++since_improvement_;
    return false;
}

TrainResult train_loop(Trainer& trainer, std::span<const data::SampleTriplet> train,
                       std::span<const data::SampleTriplet> val, const AugmentationPool& pool,
                       std::span<const MaskSourcePtr> sources, const TrainHooks& hooks) {
    if (train.empty()) throw std::invalid_argument("training split is empty");
    if (val.empty() && !hooks.validator) throw std::invalid_argument("validation split is empty");
    if (sources.empty()) throw std::invalid_argument("no mask sources configured");
    pool.validate();
    const TrainerConfig& cfg = trainer.config();
    if (static_cast<std::size_t>(cfg.n_aug) > pool.size() * sources.size())
        throw std::invalid_argument("n_aug exceeds pool size x source count");

    std::vector<AugmentedItem> val_items;
    if (!hooks.validator) val_items = evaluation_items(val, sources, cfg.seed);

    if (hooks.loss_log) losses::write_loss_header(*hooks.loss_log);
    if (hooks.epoch_log) write_epoch_header(*hooks.epoch_log);

    TrainResult result;
    EarlyStopping stopper(cfg.patience);
    std::vector<std::size_t> order(train.size());
    const auto step_cap_hit = [&] { return cfg.max_steps > 0 && trainer.step() >= cfg.max_steps; };

    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::shuffle(order.begin(), order.end(), trainer.rng());
        double loss_sum = 0.0;
        long steps = 0;
        for (std::size_t start = 0; start < order.size() && !step_cap_hit(); start += cfg.batch_size) {
            AugmentedBatch batch;
            for (std::size_t k = start; k < std::min(order.size(), start + cfg.batch_size); ++k) {
                const std::size_t i = order[k];
                const std::uint64_t seed = cfg.fixed_augmentation ? derive_seed(cfg.seed, i)
                                                                  : derive_seed(cfg.seed, i, epoch);
                batch.append(build_augmented_batch(train[i], pool, sources, cfg.n_aug, seed));
            }
            const auto b = trainer.train_step(batch);
            if (hooks.loss_log) losses::write_loss_row(*hooks.loss_log, trainer.step(), b);
            loss_sum += b.total;
            ++steps;
        }

        EpochRecord rec;
        rec.epoch = epoch;
        rec.steps = trainer.step();
        rec.mean_loss = steps ? loss_sum / steps : 0.0;
        if (hooks.validator) {
            rec.monitored = hooks.validator(epoch);
        } else {
            const auto report = evaluate(trainer.model(), val_items);
            rec.val_mf1 = report.mf1;
            rec.val_miou = report.miou;
            rec.monitored = monitored_value(report, cfg.monitor);
        }
        rec.improved = stopper.update(rec.monitored);
        if (rec.improved) {
            result.best_checkpoint = serialize_checkpoint(trainer);
            result.best_epoch = epoch;
            result.best_score = rec.monitored;
        }
        result.history.push_back(rec);
        if (hooks.epoch_log) write_epoch_row(*hooks.epoch_log, rec);
        if (stopper.should_stop()) {
            result.stopped_early = true;
            break;
        }
        if (step_cap_hit()) break;
    }
    result.steps = trainer.step();
    return result;
}

void write_epoch_header(std::ostream& os) { os << "epoch\tsteps\tmean_loss\tval_mF1\tval_mIoU\tmonitored\timproved\n"; }

void write_epoch_row(std::ostream& os, const EpochRecord& r) {
    const auto flags = os.flags();
    os << r.epoch << '\t' << r.steps << '\t' << std::setprecision(6) << r.mean_loss << std::fixed
       << std::setprecision(2) << '\t' << r.val_mf1 << '\t' << r.val_miou << '\t' << r.monitored << '\t'
       << (r.improved ? 1 : 0) << '\n';
    os.flags(flags);
}

}  // namespace pqm::training
