#pragma once

#include "pqm/model/backbone.hpp"
#include "pqm/model/layers.hpp"

#include <torch/torch.h>

namespace pqm::model {

/// Channel attention (shared MLP over max- and average-pooled descriptors)
/// followed by spatial attention (7x7 conv over channel max/mean maps).
class SpectralSpatialAttentionImpl : public torch::nn::Module {
public:
    explicit SpectralSpatialAttentionImpl(int64_t channels, int64_t reduction = 16);
    torch::Tensor forward(const torch::Tensor& x);

    /// Channel-gated features before the spatial gate.
    torch::Tensor channel_gated(const torch::Tensor& x);
    /// Shared MLP applied to a (B, C) descriptor.
    torch::Tensor descriptor_mlp(const torch::Tensor& v) { return mlp_->forward(v); }

private:
    torch::nn::Sequential mlp_{nullptr};
    torch::nn::Conv2d spatial_{nullptr};
};
TORCH_MODULE(SpectralSpatialAttention);

/// Sum of sigmoid-activated 1x3, 3x1, 1x5 and 5x1 convolutions.
class SpatialDecomposedFilterImpl : public torch::nn::Module {
public:
    explicit SpatialDecomposedFilterImpl(int64_t channels);
    torch::Tensor forward(const torch::Tensor& x);

    std::array<torch::nn::Conv2d, 4> branches{nullptr, nullptr, nullptr, nullptr};
};
TORCH_MODULE(SpatialDecomposedFilter);

/// Three sequential [3x3 atrous conv (dilation 1, 2, 3), batch norm, ReLU] blocks.
class MultiFieldFilterImpl : public torch::nn::Module {
public:
    explicit MultiFieldFilterImpl(int64_t channels);
    torch::Tensor forward(const torch::Tensor& x) { return body_->forward(x); }

    /// Spatial reach of one input pixel on the output (1 + 2 + 3).
    static constexpr int kRadius = 6;

private:
    torch::nn::Sequential body_{nullptr};
};
TORCH_MODULE(MultiFieldFilter);

class AggregatedSemanticFilterImpl : public torch::nn::Module {
public:
    explicit AggregatedSemanticFilterImpl(int64_t channels);
    torch::Tensor forward(const torch::Tensor& x);

    SpectralSpatialAttention attention{nullptr};
    SpatialDecomposedFilter decomposed{nullptr};
    MultiFieldFilter multi_field{nullptr};
};
TORCH_MODULE(AggregatedSemanticFilter);

struct EdgeOutput {
    torch::Tensor fused;     // (B, 1, H, W) logits
    torch::Tensor sideouts;  // (B, 4, H, W), channel i from encoder stage i + 1
    torch::Tensor weights;   // (B, 4, H, W)
};

/// Per-pixel weighted channel sum of the sideouts.
torch::Tensor fuse_sideouts(const torch::Tensor& sideouts, const torch::Tensor& weights);

/// Two stride-4 transposed convolutions from the H/16 grid to one full-resolution logit map.
torch::nn::Sequential make_sideout_head(int64_t in_channels);

class EdgeBranchImpl : public torch::nn::Module {
public:
    explicit EdgeBranchImpl(const ModelConfig& cfg);
    EdgeOutput forward(const FeaturePyramid& pyr);

    AggregatedSemanticFilter filter{nullptr};

private:
    std::array<torch::nn::Sequential, 4> heads_{nullptr, nullptr, nullptr, nullptr};
    torch::nn::Sequential weighting_{nullptr};
};
TORCH_MODULE(EdgeBranch);

/// Embedded-Gaussian non-local block with residual connection. Queries and
/// keys are computed on an average-pooled copy; the response is upsampled back.
class NonLocalBlockImpl : public torch::nn::Module {
public:
    NonLocalBlockImpl(int64_t channels, int64_t subsample);
    torch::Tensor forward(const torch::Tensor& x);

    AttentionProbe* probe = nullptr;

private:
    int64_t subsample_;
    torch::nn::Conv2d theta_{nullptr}, phi_{nullptr}, g_{nullptr}, out_{nullptr};
};
TORCH_MODULE(NonLocalBlock);

/// A = NL(sigmoid(conv(E)) * conv(A1)).
class RefinerImpl : public torch::nn::Module {
public:
    explicit RefinerImpl(const ModelConfig& cfg);
    torch::Tensor forward(const torch::Tensor& coarse, const torch::Tensor& edge);
    /// The gated product fed to the non-local block.
    torch::Tensor gated(const torch::Tensor& coarse, const torch::Tensor& edge);

    torch::nn::Conv2d edge_conv{nullptr}, assessment_conv{nullptr};
    NonLocalBlock non_local{nullptr};
};
TORCH_MODULE(Refiner);

}  // namespace pqm::model
