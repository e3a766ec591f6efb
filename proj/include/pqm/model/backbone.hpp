#pragma once

#include "pqm/model/attention.hpp"
#include "pqm/model/config.hpp"
#include "pqm/model/layers.hpp"

#include <torch/torch.h>

#include <array>

namespace pqm::model {

/// Stage outputs of the image encoder, all on the H/16 grid.
struct FeaturePyramid {
    std::array<torch::Tensor, 4> stages;  // (B, d_im, H/16, W/16)
    torch::Tensor compressed;             // (B, d_pr, H/16, W/16)
};

class EncoderLayerImpl : public torch::nn::Module {
public:
    EncoderLayerImpl(int64_t dim, int64_t heads, int64_t mlp_ratio);
    torch::Tensor forward(torch::Tensor x);

private:
    torch::nn::LayerNorm norm1_{nullptr}, norm2_{nullptr};
    MultiHeadAttention attn_{nullptr};
    torch::nn::Sequential mlp_{nullptr};
};
TORCH_MODULE(EncoderLayer);

/// Patchify (16x16), learned position embedding, four transformer stages,
/// and a two-convolution neck that narrows the last stage to d_pr.
class ImageEncoderImpl : public torch::nn::Module {
public:
    explicit ImageEncoderImpl(const ModelConfig& cfg);
    /// image: (B, 3, H, W), already normalised.
    FeaturePyramid forward(const torch::Tensor& image);

private:
    ModelConfig cfg_;
    torch::nn::Conv2d patch_embed_{nullptr};
    torch::Tensor pos_embed_;
    std::array<torch::nn::Sequential, 4> stages_{nullptr, nullptr, nullptr, nullptr};
    torch::nn::Sequential neck_{nullptr};
};
TORCH_MODULE(ImageEncoder);

/// Dense prompt path for a binary mask: two strided conv/LN/GELU blocks to
/// H/4, one more 3x3 conv, then 4x4 average pooling to H/16.
class PromptEncoderImpl : public torch::nn::Module {
public:
    explicit PromptEncoderImpl(const ModelConfig& cfg);
    /// mask: (B, 1, H, W) with values in {0, 1}.
    torch::Tensor forward(const torch::Tensor& mask);

private:
    ModelConfig cfg_;
    torch::nn::Sequential body_{nullptr};
};
TORCH_MODULE(PromptEncoder);

/// Fixed random-Fourier encoding of 2-D grid positions.
class PositionEmbeddingRandomImpl : public torch::nn::Module {
public:
    explicit PositionEmbeddingRandomImpl(int64_t channels);
    void reset(torch::Generator& gen);
    /// (channels, h, w)
    torch::Tensor forward(int64_t h, int64_t w);

private:
    torch::Tensor gaussian_;  // (2, channels / 2)
};
TORCH_MODULE(PositionEmbeddingRandom);

/// Two transposed convolutions (kernel 2, stride 2) with LN2d and GELU between.
torch::nn::Sequential make_upsampler4(int64_t in, int64_t mid, int64_t out, bool final_gelu);

struct DecoderOutput {
    torch::Tensor initial;  // (B, 4, H, W)
    torch::Tensor hq;       // (B, 4, H, W)
    torch::Tensor coarse;   // initial + hq
    torch::Tensor tokens;   // (B, 8, d_pr) after attention; rows 0-3 standard, 4-7 HQ
};

class MaskDecoderImpl : public torch::nn::Module {
public:
    explicit MaskDecoderImpl(const ModelConfig& cfg);
    DecoderOutput forward(const FeaturePyramid& pyr, const torch::Tensor& prompt);

    PositionEmbeddingRandom& position_embedding() { return pe_; }
    /// Upscaled channel width used for the per-token dot products.
    [[nodiscard]] int64_t head_channels() const { return head_channels_; }

private:
    ModelConfig cfg_;
    int64_t head_channels_;
    torch::Tensor tokens_, hq_tokens_;
    PositionEmbeddingRandom pe_{nullptr};
    TwoWayTransformer transformer_{nullptr};
    torch::nn::Sequential upscale_{nullptr};
    torch::nn::Sequential stage1_up_{nullptr}, compressed_up_{nullptr};
    torch::nn::Sequential hq_merge_{nullptr};
    Mlp head_{nullptr}, hq_head_{nullptr};
};
TORCH_MODULE(MaskDecoder);

}  // namespace pqm::model
