#include "pqm/model/edge.hpp"

namespace nn = torch::nn;
namespace F = torch::nn::functional;

namespace pqm::model {

SpectralSpatialAttentionImpl::SpectralSpatialAttentionImpl(int64_t channels, int64_t reduction) {
    const int64_t hidden = std::max<int64_t>(channels / reduction, 1);
    mlp_ = register_module("mlp", nn::Sequential(nn::Linear(channels, hidden), nn::ReLU(), nn::Linear(hidden, channels)));
    spatial_ = register_module("spatial", nn::Conv2d(nn::Conv2dOptions(2, 1, 7).padding(3)));
}

torch::Tensor SpectralSpatialAttentionImpl::channel_gated(const torch::Tensor& x) {
    const auto max_desc = std::get<0>(x.flatten(2).max(-1));
    const auto avg_desc = x.mean({2, 3});
    const auto gate = torch::sigmoid(mlp_->forward(max_desc) + mlp_->forward(avg_desc));
    return x * gate.unsqueeze(-1).unsqueeze(-1);
}

torch::Tensor SpectralSpatialAttentionImpl::forward(const torch::Tensor& x) {
    const auto spr = channel_gated(x);
    const auto maps = torch::cat({std::get<0>(spr.max(1, true)), spr.mean(1, true)}, 1);
    return spr * torch::sigmoid(spatial_(maps));
}

SpatialDecomposedFilterImpl::SpatialDecomposedFilterImpl(int64_t channels) {
    const std::array<std::array<int64_t, 4>, 4> shapes = {{{1, 3, 0, 1}, {3, 1, 1, 0}, {1, 5, 0, 2}, {5, 1, 2, 0}}};
    for (std::size_t i = 0; i < shapes.size(); ++i) {
        const auto& s = shapes[i];
        branches[i] = register_module("branch" + std::to_string(i),
                                      nn::Conv2d(nn::Conv2dOptions(channels, channels, {s[0], s[1]}).padding({s[2], s[3]})));
    }
}

torch::Tensor SpatialDecomposedFilterImpl::forward(const torch::Tensor& x) {
    auto out = torch::sigmoid(branches[0](x));
    for (std::size_t i = 1; i < branches.size(); ++i) out = out + torch::sigmoid(branches[i](x));
    return out;
}

MultiFieldFilterImpl::MultiFieldFilterImpl(int64_t channels) {
    nn::Sequential body;
    for (int64_t d = 1; d <= 3; ++d) {
        body->push_back(nn::Conv2d(nn::Conv2dOptions(channels, channels, 3).padding(d).dilation(d)));
        body->push_back(nn::BatchNorm2d(channels));
        body->push_back(nn::ReLU());
    }
    body_ = register_module("body", body);
}

AggregatedSemanticFilterImpl::AggregatedSemanticFilterImpl(int64_t channels) {
    attention = register_module("attention", SpectralSpatialAttention(channels));
    decomposed = register_module("decomposed", SpatialDecomposedFilter(channels));
    multi_field = register_module("multi_field", MultiFieldFilter(channels));
}

torch::Tensor AggregatedSemanticFilterImpl::forward(const torch::Tensor& x) {
    return multi_field(decomposed(attention(x)));
}

torch::Tensor fuse_sideouts(const torch::Tensor& sideouts, const torch::Tensor& weights) {
    TORCH_CHECK(sideouts.sizes() == weights.sizes(), "sideouts ", sideouts.sizes(), " and weights ", weights.sizes(),
                " differ");
    return (sideouts * weights).sum(1, true);
}

torch::nn::Sequential make_sideout_head(int64_t in_channels) {
    const int64_t mid = std::max<int64_t>(in_channels / 2, 16);
    return nn::Sequential(nn::ConvTranspose2d(nn::ConvTranspose2dOptions(in_channels, mid, 4).stride(4)),
                          LayerNorm2d(mid), nn::GELU(),
                          nn::ConvTranspose2d(nn::ConvTranspose2dOptions(mid, 1, 4).stride(4)));
}

EdgeBranchImpl::EdgeBranchImpl(const ModelConfig& cfg) {
    filter = register_module("filter", AggregatedSemanticFilter(cfg.d_im));
    for (int i = 0; i < 4; ++i) heads_[i] = register_module("sideout" + std::to_string(i + 1), make_sideout_head(cfg.d_im));
    weighting_ = register_module(
        "weighting", nn::Sequential(nn::Conv2d(nn::Conv2dOptions(1, 8, 1)), nn::ReLU(), nn::Conv2d(nn::Conv2dOptions(8, 8, 1)),
                                    nn::ReLU(), nn::Conv2d(nn::Conv2dOptions(8, 4, 1))));
}

EdgeOutput EdgeBranchImpl::forward(const FeaturePyramid& pyr) {
    std::vector<torch::Tensor> sides;
    for (int i = 0; i < 3; ++i) sides.push_back(heads_[i]->forward(pyr.stages[i]));
    sides.push_back(heads_[3]->forward(filter(pyr.stages[3])));
    EdgeOutput out;
    out.sideouts = torch::cat(sides, 1);
    out.weights = weighting_->forward(sides[3]);
    out.fused = fuse_sideouts(out.sideouts, out.weights);
    return out;
}

NonLocalBlockImpl::NonLocalBlockImpl(int64_t channels, int64_t subsample) : subsample_(subsample) {
    const int64_t inter = std::max<int64_t>(channels / 2, 1);
    theta_ = register_module("theta", nn::Conv2d(nn::Conv2dOptions(channels, inter, 1)));
    phi_ = register_module("phi", nn::Conv2d(nn::Conv2dOptions(channels, inter, 1)));
    g_ = register_module("g", nn::Conv2d(nn::Conv2dOptions(channels, inter, 1)));
    out_ = register_module("out", nn::Conv2d(nn::Conv2dOptions(inter, channels, 1)));
}

torch::Tensor NonLocalBlockImpl::forward(const torch::Tensor& x) {
    const int64_t b = x.size(0), h = x.size(2), w = x.size(3);
    TORCH_CHECK(h % subsample_ == 0 && w % subsample_ == 0, "non-local input ", h, "x", w,
                " is not divisible by the subsample factor ", subsample_);
    const auto pooled = subsample_ > 1 ? F::avg_pool2d(x, F::AvgPool2dFuncOptions(subsample_)) : x;
    const int64_t ph = pooled.size(2), pw = pooled.size(3);
    const auto theta = theta_(pooled).flatten(2).transpose(1, 2);  // (B, L, C')
    const auto phi = phi_(pooled).flatten(2);                      // (B, C', L)
    const auto g = g_(pooled).flatten(2).transpose(1, 2);          // (B, L, C')
    const auto affinity = torch::softmax(torch::bmm(theta, phi), -1);
    if (probe) probe->maps.push_back(affinity.detach());
    auto y = torch::bmm(affinity, g).transpose(1, 2).reshape({b, -1, ph, pw});
    auto z = out_(y);
    if (subsample_ > 1)
        z = F::interpolate(z, F::InterpolateFuncOptions()
                                  .size(std::vector<int64_t>{h, w})
                                  .mode(torch::kBilinear)
                                  .align_corners(false));
    return x + z;
}

RefinerImpl::RefinerImpl(const ModelConfig& cfg) {
    edge_conv = register_module("edge_conv", nn::Conv2d(nn::Conv2dOptions(1, 1, 3).padding(1)));
    assessment_conv = register_module("assessment_conv", nn::Conv2d(nn::Conv2dOptions(4, 4, 3).padding(1)));
    non_local = register_module("non_local", NonLocalBlock(4, cfg.nonlocal_subsample));
}

torch::Tensor RefinerImpl::gated(const torch::Tensor& coarse, const torch::Tensor& edge) {
    TORCH_CHECK(coarse.dim() == 4 && coarse.size(1) == 4, "coarse assessment must be (B, 4, H, W)");
    TORCH_CHECK(edge.dim() == 4 && edge.size(1) == 1, "edge logits must be (B, 1, H, W)");
    TORCH_CHECK(coarse.size(0) == edge.size(0) && coarse.size(2) == edge.size(2) && coarse.size(3) == edge.size(3),
                "coarse assessment ", coarse.sizes(), " and edge logits ", edge.sizes(), " are misaligned");
    return torch::sigmoid(edge_conv(edge)) * assessment_conv(coarse);
}

torch::Tensor RefinerImpl::forward(const torch::Tensor& coarse, const torch::Tensor& edge) {
    return non_local(gated(coarse, edge));
}

}  // namespace pqm::model
