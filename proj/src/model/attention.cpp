#include "pqm/model/attention.hpp"

#include <cmath>

namespace pqm::model {

torch::Tensor scaled_dot_product_attention(const torch::Tensor& q, const torch::Tensor& k, const torch::Tensor& v,
                                           torch::Tensor* weights) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(q.size(-1)));
    auto attn = torch::softmax(torch::matmul(q, k.transpose(-2, -1)) * scale, -1);
    if (weights) *weights = attn;
    return torch::matmul(attn, v);
}

MultiHeadAttentionImpl::MultiHeadAttentionImpl(int64_t dim, int64_t heads) : heads_(heads) {
    TORCH_CHECK(heads > 0 && dim % heads == 0, "attention width ", dim, " not divisible by ", heads, " heads");
    q_proj_ = register_module("q_proj", torch::nn::Linear(dim, dim));
    k_proj_ = register_module("k_proj", torch::nn::Linear(dim, dim));
    v_proj_ = register_module("v_proj", torch::nn::Linear(dim, dim));
    out_proj_ = register_module("out_proj", torch::nn::Linear(dim, dim));
}

torch::Tensor MultiHeadAttentionImpl::forward(const torch::Tensor& q, const torch::Tensor& k, const torch::Tensor& v) {
    const auto split = [this](const torch::Tensor& x) {
        const int64_t b = x.size(0), n = x.size(1), c = x.size(2);
        return x.reshape({b, n, heads_, c / heads_}).transpose(1, 2);
    };
    torch::Tensor weights;
    auto out = scaled_dot_product_attention(split(q_proj_(q)), split(k_proj_(k)), split(v_proj_(v)),
                                            probe ? &weights : nullptr);
    if (probe) probe->maps.push_back(weights.detach());
    const int64_t b = out.size(0), n = out.size(2);
    out = out.transpose(1, 2).reshape({b, n, -1});
    return out_proj_(out);
}

TwoWayBlockImpl::TwoWayBlockImpl(int64_t dim, int64_t heads, int64_t mlp_dim, bool skip_first_pe)
    : skip_first_pe_(skip_first_pe) {
    self_attn_ = register_module("self_attn", MultiHeadAttention(dim, heads));
    token_to_feature_ = register_module("token_to_feature", MultiHeadAttention(dim, heads));
    feature_to_token_ = register_module("feature_to_token", MultiHeadAttention(dim, heads));
    const auto ln = [dim] { return torch::nn::LayerNorm(torch::nn::LayerNormOptions({dim})); };
    norm1_ = register_module("norm1", ln());
    norm2_ = register_module("norm2", ln());
    norm3_ = register_module("norm3", ln());
    norm4_ = register_module("norm4", ln());
    mlp_ = register_module("mlp", torch::nn::Sequential(torch::nn::Linear(dim, mlp_dim), torch::nn::ReLU(),
                                                        torch::nn::Linear(mlp_dim, dim)));
}

std::pair<torch::Tensor, torch::Tensor> TwoWayBlockImpl::forward(torch::Tensor tokens, torch::Tensor features,
                                                                 const torch::Tensor& token_pe,
                                                                 const torch::Tensor& feature_pe) {
    if (skip_first_pe_) {
        tokens = self_attn_(tokens, tokens, tokens);
    } else {
        auto q = tokens + token_pe;
        tokens = tokens + self_attn_(q, q, tokens);
    }
    tokens = norm1_(tokens);

    auto q = tokens + token_pe;
    auto k = features + feature_pe;
    tokens = norm2_(tokens + token_to_feature_(q, k, features));

    tokens = norm3_(tokens + mlp_->forward(tokens));

    q = tokens + token_pe;
    k = features + feature_pe;
    features = norm4_(features + feature_to_token_(k, q, tokens));
    return {tokens, features};
}

TwoWayTransformerImpl::TwoWayTransformerImpl(int64_t dim, int64_t heads, int64_t mlp_dim, int depth) {
    for (int i = 0; i < depth; ++i)
        blocks_.push_back(register_module("block" + std::to_string(i), TwoWayBlock(dim, heads, mlp_dim, i == 0)));
    final_attn_ = register_module("final_attn", MultiHeadAttention(dim, heads));
    norm_final_ = register_module("norm_final", torch::nn::LayerNorm(torch::nn::LayerNormOptions({dim})));
}

std::pair<torch::Tensor, torch::Tensor> TwoWayTransformerImpl::forward(const torch::Tensor& tokens,
                                                                       const torch::Tensor& features,
                                                                       const torch::Tensor& feature_pe) {
    // The initial tokens double as their own positional term.
    torch::Tensor t = tokens;
    torch::Tensor f = features;
    for (auto& block : blocks_) std::tie(t, f) = block(t, f, tokens, feature_pe);
    auto q = t + tokens;
    auto k = f + feature_pe;
    t = norm_final_(t + final_attn_(q, k, f));
    return {t, f};
}

}  // namespace pqm::model
