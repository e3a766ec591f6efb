#pragma once

#include <array>
#include <cstdint>
#include <string>

namespace pqm::model {

struct ModelConfig {
    /// Square input side in pixels; must be a multiple of the patch size (16).
    int image_size = 64;
    int patch_size = 16;
    /// Image-encoder width.
    int d_im = 32;
    /// Prompt / decoder width.
    int d_pr = 16;
    /// Transformer layers per encoder stage.
    std::array<int, 4> stage_depths = {1, 1, 1, 1};
    /// Heads for the decoder attention; the encoder uses `encoder_heads`.
    int num_heads = 4;
    int encoder_heads = 4;
    int mlp_ratio = 4;
    /// Hidden width of the decoder's two-way MLP.
    int decoder_mlp_dim = 64;
    /// Average-pool factor applied inside the non-local refinement.
    int nonlocal_subsample = 4;
    /// Per-channel normalisation applied to 8-bit RGB input.
    std::array<double, 3> pixel_mean = {123.675, 116.28, 103.53};
    std::array<double, 3> pixel_std = {58.395, 57.12, 57.375};

    /// Throws std::invalid_argument when the configuration is inconsistent.
    void validate() const;

    [[nodiscard]] int grid() const { return image_size / patch_size; }

    /// Small configuration that trains in minutes on a laptop CPU.
    static ModelConfig toy();
    /// Widths and depths of the base-size promptable backbone.
    static ModelConfig base_preset(int image_size = 320);
};

std::string describe(const ModelConfig& cfg);

}  // namespace pqm::model
