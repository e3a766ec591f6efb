#pragma once

#include "pqm/dataset.hpp"
#include "pqm/losses.hpp"
#include "pqm/metrics.hpp"
#include "pqm/model/assessor.hpp"
#include "pqm/training/ams.hpp"

#include <torch/torch.h>

#include <functional>
#include <iosfwd>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace pqm::training {

enum class Monitor { MeanF1, MeanIoU };

struct TrainerConfig {
    int n_aug = 4;
    double learning_rate = 1e-4;
    int patience = 10;
    int max_epochs = 200;
    std::uint64_t seed = 0;
    /// Samples per optimisation step; each contributes n_aug augmented copies.
    int batch_size = 1;
    /// Hard cap on optimisation steps; 0 means no cap.
    long max_steps = 0;
    /// Reuse the same augmented copies every epoch instead of redrawing them.
    bool fixed_augmentation = false;
    Monitor monitor = Monitor::MeanF1;

    void validate() const;
};

/// Raised when a step produces a non-finite loss. Carries the provenance of
/// every item in the offending batch.
class NonFiniteLossError : public std::runtime_error {
public:
    NonFiniteLossError(const std::string& what, std::vector<std::string> provenance);
    [[nodiscard]] const std::vector<std::string>& provenance() const { return provenance_; }

private:
    std::vector<std::string> provenance_;
};

struct BatchTensors {
    torch::Tensor images;  // (B, 3, H, W)
    torch::Tensor masks;   // (B, 1, H, W)
    losses::LossTargets targets;
};

/// Stacks an augmented batch; every item must match the configured size.
BatchTensors batch_tensors(std::span<const AugmentedItem> items, const model::ModelConfig& cfg);

class Trainer {
public:
    Trainer(model::QualityAssessor model, TrainerConfig cfg, losses::LossConfig loss_cfg = {});

    /// One forward pass, one loss evaluation, one Adam update.
    losses::LossBreakdown train_step(const AugmentedBatch& batch);

    model::QualityAssessor& model() { return model_; }
    torch::optim::Adam& optimizer() { return *optimizer_; }
    [[nodiscard]] const TrainerConfig& config() const { return cfg_; }
    [[nodiscard]] const losses::LossConfig& loss_config() const { return loss_cfg_; }
    [[nodiscard]] long step() const { return step_; }
    void set_step(long s) { step_ = s; }
    std::mt19937_64& rng() { return rng_; }
    /// YAML stored in checkpoints written for this trainer.
    void set_config_snapshot(std::string yaml) { snapshot_ = std::move(yaml); }
    [[nodiscard]] const std::string& config_snapshot() const { return snapshot_; }

private:
    model::QualityAssessor model_;
    TrainerConfig cfg_;
    losses::LossConfig loss_cfg_;
    std::unique_ptr<torch::optim::Adam> optimizer_;
    std::mt19937_64 rng_;
    long step_ = 0;
    std::string snapshot_;
};

struct Assessment {
    QualityMap quality;
    EdgeMap edges;
};

/// Single forward pass in evaluation mode. Throws std::invalid_argument when
/// the inputs do not match the model's configured size.
Assessment assess(model::QualityAssessor& model, const RgbImage& image, const BinaryMask& unchecked);

/// Identity-transform items for evaluation: each sample's own unchecked mask
/// when present, otherwise one generated by a source picked from `seed`.
std::vector<AugmentedItem> evaluation_items(std::span<const data::SampleTriplet> samples,
                                            std::span<const MaskSourcePtr> sources, std::uint64_t seed);

/// Pooled-count report of predicted against reference quality maps.
metrics::AssessmentReport evaluate(model::QualityAssessor& model, std::span<const AugmentedItem> items,
                                   int chunk = 8);

double monitored_value(const metrics::AssessmentReport& r, Monitor m);

/// Tracks the best score and counts epochs without improvement. Training
/// stops once that count exceeds the patience.
class EarlyStopping {
public:
    explicit EarlyStopping(int patience);
    /// Returns true when `score` improves on the best so far.
    bool update(double score);
    [[nodiscard]] bool should_stop() const { return since_improvement_ > patience_; }
    [[nodiscard]] double best() const { return best_; }
    [[nodiscard]] int best_epoch() const { return best_epoch_; }
    [[nodiscard]] int epochs_seen() const { return epochs_; }

private:
    int patience_;
    int epochs_ = 0;
    int best_epoch_ = 0;
    int since_improvement_ = 0;
    double best_ = 0.0;
};

struct EpochRecord {
    int epoch = 0;
    long steps = 0;
    double mean_loss = 0.0;
    double monitored = 0.0;
    double val_mf1 = 0.0;
    double val_miou = 0.0;
    bool improved = false;
};

struct TrainResult {
    /// Serialised checkpoint of the best epoch.
    std::string best_checkpoint;
    int best_epoch = 0;
    double best_score = 0.0;
    long steps = 0;
    bool stopped_early = false;
    std::vector<EpochRecord> history;
};

struct TrainHooks {
    std::ostream* loss_log = nullptr;
    std::ostream* epoch_log = nullptr;
    /// Replaces validation when set; receives the 1-based epoch.
    std::function<double(int)> validator;
};

/// Epochs of augmented batches with validation and early stopping.
TrainResult train_loop(Trainer& trainer, std::span<const data::SampleTriplet> train,
                       std::span<const data::SampleTriplet> val, const AugmentationPool& pool,
                       std::span<const MaskSourcePtr> sources, const TrainHooks& hooks = {});

void write_epoch_header(std::ostream& os);
void write_epoch_row(std::ostream& os, const EpochRecord& r);

}  // namespace pqm::training
