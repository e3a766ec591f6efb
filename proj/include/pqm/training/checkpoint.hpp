#pragma once

#include "pqm/model/assessor.hpp"
#include "pqm/training/run_config.hpp"
#include "pqm/training/trainer.hpp"

#include <filesystem>
#include <string>

namespace pqm::training {

/// Archive layout: "config" (YAML text), "step", "rng" (mt19937_64 text
/// state), "params/<dotted.name>", "buffers/<dotted.name>", "optimizer/...".
std::string serialize_checkpoint(Trainer& trainer, const std::string& config_yaml = "");
void save_checkpoint(const std::filesystem::path& path, Trainer& trainer, const std::string& config_yaml = "");

struct LoadedCheckpoint {
    RunConfig config;
    model::QualityAssessor model{nullptr};
    long step = 0;
    std::string rng_state;
};

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);
LoadedCheckpoint load_checkpoint_bytes(const std::string& bytes);

/// Restores parameters, buffers, optimiser moments, step and RNG into an
/// existing trainer whose model has the same layout.
void restore_trainer(Trainer& trainer, const std::string& bytes);

}  // namespace pqm::training
