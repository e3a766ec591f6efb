#pragma once

#include "pqm/losses.hpp"
#include "pqm/model/config.hpp"
#include "pqm/training/ams.hpp"
#include "pqm/training/mask_source.hpp"
#include "pqm/training/trainer.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace pqm::training {

struct SourceSpec {
    std::string name;
    /// "synthetic" corrupts the ground truth; "provided" returns the sample's own mask.
    std::string kind = "synthetic";
    CorruptionSpec corruption;
};

struct DataConfig {
    std::string train_manifest;
    std::string val_manifest;
    /// Share of the training manifest held out when no validation manifest is given.
    double val_fraction = 0.2;
};

/// Everything a training run needs besides the data itself.
struct RunConfig {
    model::ModelConfig model = model::ModelConfig::toy();
    TrainerConfig trainer;
    losses::LossConfig loss;
    AugmentationPool pool;
    /// Empty means default_mask_sources().
    std::vector<SourceSpec> sources;
    DataConfig data;

    void validate() const;
    [[nodiscard]] std::vector<MaskSourcePtr> build_sources() const;
};

/// Parses the YAML layout written by to_yaml. Missing keys keep their
/// defaults; unknown keys are rejected. Throws std::invalid_argument.
RunConfig parse_run_config(const std::string& yaml);
RunConfig load_run_config(const std::filesystem::path& path);
std::string to_yaml(const RunConfig& cfg);

}  // namespace pqm::training
