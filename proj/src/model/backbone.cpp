#include "pqm/model/backbone.hpp"

#include <cmath>
#include <numbers>

namespace nn = torch::nn;

namespace pqm::model {

EncoderLayerImpl::EncoderLayerImpl(int64_t dim, int64_t heads, int64_t mlp_ratio) {
    norm1_ = register_module("norm1", nn::LayerNorm(nn::LayerNormOptions({dim})));
    attn_ = register_module("attn", MultiHeadAttention(dim, heads));
    norm2_ = register_module("norm2", nn::LayerNorm(nn::LayerNormOptions({dim})));
    mlp_ = register_module("mlp", nn::Sequential(nn::Linear(dim, dim * mlp_ratio), nn::GELU(),
                                                 nn::Linear(dim * mlp_ratio, dim)));
}

torch::Tensor EncoderLayerImpl::forward(torch::Tensor x) {
    auto h = norm1_(x);
    x = x + attn_(h, h, h);
    return x + mlp_->forward(norm2_(x));
}

ImageEncoderImpl::ImageEncoderImpl(const ModelConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    const int64_t g = cfg.grid();
    patch_embed_ = register_module(
        "patch_embed", nn::Conv2d(nn::Conv2dOptions(3, cfg.d_im, cfg.patch_size).stride(cfg.patch_size)));
    pos_embed_ = register_parameter("pos_embed", torch::zeros({1, g * g, cfg.d_im}));
    for (int s = 0; s < 4; ++s) {
        nn::Sequential stage;
        for (int i = 0; i < cfg.stage_depths[s]; ++i) stage->push_back(EncoderLayer(cfg.d_im, cfg.encoder_heads, cfg.mlp_ratio));
        stages_[s] = register_module("stage" + std::to_string(s + 1), stage);
    }
    neck_ = register_module(
        "neck", nn::Sequential(nn::Conv2d(nn::Conv2dOptions(cfg.d_im, cfg.d_pr, 3).padding(1)), LayerNorm2d(cfg.d_pr),
                               nn::Conv2d(nn::Conv2dOptions(cfg.d_pr, cfg.d_pr, 3).padding(1))));
}

FeaturePyramid ImageEncoderImpl::forward(const torch::Tensor& image) {
    TORCH_CHECK(image.dim() == 4 && image.size(1) == 3, "image must be (B, 3, H, W)");
    TORCH_CHECK(image.size(2) % 16 == 0 && image.size(3) % 16 == 0, "image size ", image.size(2), "x", image.size(3),
                " is not divisible by 16");
    TORCH_CHECK(image.size(2) == cfg_.image_size && image.size(3) == cfg_.image_size, "image size ", image.size(2),
                "x", image.size(3), " does not match the configured ", cfg_.image_size);
    const int64_t b = image.size(0), g = cfg_.grid();
    auto x = patch_embed_(image).flatten(2).transpose(1, 2) + pos_embed_;
    FeaturePyramid out;
    for (int s = 0; s < 4; ++s) {
        x = stages_[s]->forward(x);
        out.stages[s] = x.transpose(1, 2).reshape({b, cfg_.d_im, g, g});
    }
    out.compressed = neck_->forward(out.stages[3]);
    return out;
}

PromptEncoderImpl::PromptEncoderImpl(const ModelConfig& cfg) : cfg_(cfg) {
    const int64_t quarter = std::max(cfg.d_pr / 4, 1);
    body_ = register_module(
        "body", nn::Sequential(nn::Conv2d(nn::Conv2dOptions(1, quarter, 3).stride(2).padding(1)), LayerNorm2d(quarter),
                               nn::GELU(), nn::Conv2d(nn::Conv2dOptions(quarter, cfg.d_pr, 3).stride(2).padding(1)),
                               LayerNorm2d(cfg.d_pr), nn::GELU(),
                               nn::Conv2d(nn::Conv2dOptions(cfg.d_pr, cfg.d_pr, 3).padding(1)),
                               nn::AvgPool2d(nn::AvgPool2dOptions(4).stride(4))));
}

torch::Tensor PromptEncoderImpl::forward(const torch::Tensor& mask) {
    TORCH_CHECK(mask.dim() == 4 && mask.size(1) == 1, "mask must be (B, 1, H, W)");
    TORCH_CHECK(mask.size(2) == cfg_.image_size && mask.size(3) == cfg_.image_size, "mask size ", mask.size(2), "x",
                mask.size(3), " does not match the configured ", cfg_.image_size);
    return body_->forward(mask);
}

PositionEmbeddingRandomImpl::PositionEmbeddingRandomImpl(int64_t channels) {
    TORCH_CHECK(channels % 2 == 0, "positional embedding needs an even channel count");
    gaussian_ = register_buffer("gaussian", torch::randn({2, channels / 2}));
}

void PositionEmbeddingRandomImpl::reset(torch::Generator& gen) {
    torch::NoGradGuard no_grad;
    gaussian_.normal_(0.0, 1.0, gen);
}

torch::Tensor PositionEmbeddingRandomImpl::forward(int64_t h, int64_t w) {
    auto ys = (torch::arange(h, torch::kFloat32) + 0.5) / static_cast<double>(h);
    auto xs = (torch::arange(w, torch::kFloat32) + 0.5) / static_cast<double>(w);
    auto grid = torch::stack(torch::meshgrid({ys, xs}, "ij"), -1);  // (h, w, 2) as (y, x)
    auto coords = 2.0 * grid.flip(-1) - 1.0;                        // (x, y) in [-1, 1]
    auto proj = 2.0 * std::numbers::pi * torch::matmul(coords, gaussian_);
    return torch::cat({torch::sin(proj), torch::cos(proj)}, -1).permute({2, 0, 1});
}

torch::nn::Sequential make_upsampler4(int64_t in, int64_t mid, int64_t out, bool final_gelu) {
    nn::Sequential seq(nn::ConvTranspose2d(nn::ConvTranspose2dOptions(in, mid, 2).stride(2)), LayerNorm2d(mid),
                       nn::GELU(), nn::ConvTranspose2d(nn::ConvTranspose2dOptions(mid, out, 2).stride(2)));
    if (final_gelu) seq->push_back(nn::GELU());
    return seq;
}

MaskDecoderImpl::MaskDecoderImpl(const ModelConfig& cfg) : cfg_(cfg) {
    const int64_t d = cfg.d_pr;
    head_channels_ = std::max<int64_t>(d / 8, 8);
    const int64_t up_mid = std::max<int64_t>(d / 4, 8);
    tokens_ = register_parameter("tokens", torch::zeros({4, d}));
    hq_tokens_ = register_parameter("hq_tokens", torch::zeros({4, d}));
    pe_ = register_module("pe", PositionEmbeddingRandom(d));
    transformer_ = register_module("transformer", TwoWayTransformer(d, cfg.num_heads, cfg.decoder_mlp_dim));
    upscale_ = register_module("upscale", make_upsampler4(d, up_mid, head_channels_, true));
    stage1_up_ = register_module("stage1_up", make_upsampler4(cfg.d_im, d, d, false));
    compressed_up_ = register_module("compressed_up", make_upsampler4(d, d, d, false));
    hq_merge_ = register_module(
        "hq_merge", nn::Sequential(nn::Conv2d(nn::Conv2dOptions(d + head_channels_, d, 3).padding(1)),
                                   LayerNorm2d(d), nn::GELU(),
                                   nn::Conv2d(nn::Conv2dOptions(d, head_channels_, 3).padding(1))));
    head_ = register_module("head", Mlp(d, d, head_channels_, 3));
    hq_head_ = register_module("hq_head", Mlp(d, d, head_channels_, 3));
}

DecoderOutput MaskDecoderImpl::forward(const FeaturePyramid& pyr, const torch::Tensor& prompt) {
    const auto& fim = pyr.compressed;
    TORCH_CHECK(prompt.sizes() == fim.sizes(), "prompt embedding ", prompt.sizes(), " does not align with image features ",
                fim.sizes());
    const int64_t b = fim.size(0), g = fim.size(2), gw = fim.size(3);
    const int64_t size = g * 16;

    auto src = fim + prompt;
    auto pos = pe_(g, gw).unsqueeze(0).expand({b, -1, -1, -1});
    auto tokens = torch::cat({tokens_, hq_tokens_}, 0).unsqueeze(0).expand({b, -1, -1});

    auto [out_tokens, feats] =
        transformer_(tokens, src.flatten(2).transpose(1, 2), pos.flatten(2).transpose(1, 2));

    auto fprime = feats.transpose(1, 2).reshape({b, cfg_.d_pr, g, gw});
    auto up = upscale_->forward(fprime);  // (B, c, H/4, W/4)
    auto hq_feats = stage1_up_->forward(pyr.stages[0]) + compressed_up_->forward(fim);
    auto merged = hq_merge_->forward(torch::cat({hq_feats, up}, 1));

    auto std_w = head_(out_tokens.slice(1, 0, 4));  // (B, 4, c)
    auto hq_w = hq_head_(out_tokens.slice(1, 4, 8));
    const int64_t q = up.size(2), qw = up.size(3);
    auto initial = torch::matmul(std_w, up.flatten(2)).reshape({b, 4, q, qw});
    auto hq = torch::matmul(hq_w, merged.flatten(2)).reshape({b, 4, q, qw});

    const auto resize = [size, gw](const torch::Tensor& x) {
        return torch::nn::functional::interpolate(
            x, torch::nn::functional::InterpolateFuncOptions()
                   .size(std::vector<int64_t>{size, gw * 16})
                   .mode(torch::kBilinear)
                   .align_corners(false));
    };
    DecoderOutput out;
    out.initial = resize(initial);
    out.hq = resize(hq);
    out.coarse = out.initial + out.hq;
    out.tokens = out_tokens;
    return out;
}

}  // namespace pqm::model
