#pragma once

#include "pqm/model/layers.hpp"

#include <torch/torch.h>

namespace pqm::model {

/// softmax(q k^T / sqrt(d)) v over the last two axes. When `weights` is
/// non-null it receives the softmax matrix.
torch::Tensor scaled_dot_product_attention(const torch::Tensor& q, const torch::Tensor& k, const torch::Tensor& v,
                                           torch::Tensor* weights = nullptr);

/// Multi-head attention on (B, N, C) sequences with separate q/k/v/out projections.
class MultiHeadAttentionImpl : public torch::nn::Module {
public:
    MultiHeadAttentionImpl(int64_t dim, int64_t heads);
    torch::Tensor forward(const torch::Tensor& q, const torch::Tensor& k, const torch::Tensor& v);

    AttentionProbe* probe = nullptr;

private:
    int64_t heads_;
    torch::nn::Linear q_proj_{nullptr}, k_proj_{nullptr}, v_proj_{nullptr}, out_proj_{nullptr};
};
TORCH_MODULE(MultiHeadAttention);

/// Token/feature block: token self-attention, token-to-feature attention,
/// token MLP, feature-to-token attention. Post-norm residuals throughout.
class TwoWayBlockImpl : public torch::nn::Module {
public:
    TwoWayBlockImpl(int64_t dim, int64_t heads, int64_t mlp_dim, bool skip_first_pe);

    /// tokens (B, T, C), features (B, L, C); positional terms share those shapes.
    std::pair<torch::Tensor, torch::Tensor> forward(torch::Tensor tokens, torch::Tensor features,
                                                    const torch::Tensor& token_pe, const torch::Tensor& feature_pe);

private:
    bool skip_first_pe_;
    MultiHeadAttention self_attn_{nullptr}, token_to_feature_{nullptr}, feature_to_token_{nullptr};
    torch::nn::LayerNorm norm1_{nullptr}, norm2_{nullptr}, norm3_{nullptr}, norm4_{nullptr};
    torch::nn::Sequential mlp_{nullptr};
};
TORCH_MODULE(TwoWayBlock);

/// Two blocks followed by a last token-to-feature attention.
class TwoWayTransformerImpl : public torch::nn::Module {
public:
    TwoWayTransformerImpl(int64_t dim, int64_t heads, int64_t mlp_dim, int depth = 2);

    std::pair<torch::Tensor, torch::Tensor> forward(const torch::Tensor& tokens, const torch::Tensor& features,
                                                    const torch::Tensor& feature_pe);

private:
    std::vector<TwoWayBlock> blocks_;
    MultiHeadAttention final_attn_{nullptr};
    torch::nn::LayerNorm norm_final_{nullptr};
};
TORCH_MODULE(TwoWayTransformer);

}  // namespace pqm::model
