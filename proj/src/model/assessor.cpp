#include "pqm/model/assessor.hpp"

#include "pqm/model/layers.hpp"

#include <ATen/CPUGeneratorImpl.h>

namespace pqm::model {

QualityAssessorImpl::QualityAssessorImpl(const ModelConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    encoder = register_module("encoder", ImageEncoder(cfg_));
    prompt_encoder = register_module("prompt_encoder", PromptEncoder(cfg_));
    decoder = register_module("decoder", MaskDecoder(cfg_));
    edge_branch = register_module("edge_branch", EdgeBranch(cfg_));
    refiner = register_module("refiner", Refiner(cfg_));
}

AssessorOutput QualityAssessorImpl::forward(const torch::Tensor& image, const torch::Tensor& mask) {
    TORCH_CHECK(image.size(0) == mask.size(0), "image batch ", image.size(0), " and mask batch ", mask.size(0),
                " differ");
    const FeaturePyramid pyr = encoder(image);
    const torch::Tensor prompt = prompt_encoder(mask);
    const DecoderOutput dec = decoder(pyr, prompt);
    AssessorOutput out;
    out.coarse = dec.coarse;
    out.edges = edge_branch(pyr);
    out.assessment = refiner(dec.coarse, out.edges.fused);
    return out;
}

void QualityAssessorImpl::reset_parameters(uint64_t seed) {
    torch::Generator gen = at::make_generator<at::CPUGeneratorImpl>(seed);
    initialize_parameters(*this, gen);
    decoder->position_embedding()->reset(gen);
    // Batch-norm running statistics restart as well.
    torch::NoGradGuard no_grad;
    for (auto& buf : named_buffers()) {
        const std::string& name = buf.key();
        if (name.ends_with("running_mean")) buf.value().zero_();
        else if (name.ends_with("running_var")) buf.value().fill_(1.0);
        else if (name.ends_with("num_batches_tracked")) buf.value().zero_();
    }
}

void QualityAssessorImpl::attach_probe(AttentionProbe* probe) {
    for (const auto& m : modules(/*include_self=*/false)) {
        if (auto* attn = dynamic_cast<MultiHeadAttentionImpl*>(m.get())) attn->probe = probe;
        else if (auto* nl = dynamic_cast<NonLocalBlockImpl*>(m.get())) nl->probe = probe;
    }
}

QualityAssessor make_assessor(const ModelConfig& cfg, uint64_t seed) {
    QualityAssessor model(cfg);
    model->reset_parameters(seed);
    return model;
}

torch::Tensor image_tensor(const RgbImage& image, const ModelConfig& cfg) {
    const int h = image.height(), w = image.width();
    auto bytes = torch::from_blob(const_cast<std::uint8_t*>(image.bytes().data()), {h, w, 3}, torch::kUInt8);
    auto x = bytes.to(torch::kFloat32).permute({2, 0, 1});
    auto mean = torch::tensor({cfg.pixel_mean[0], cfg.pixel_mean[1], cfg.pixel_mean[2]}, torch::kFloat32).view({3, 1, 1});
    auto std = torch::tensor({cfg.pixel_std[0], cfg.pixel_std[1], cfg.pixel_std[2]}, torch::kFloat32).view({3, 1, 1});
    return ((x - mean) / std).contiguous();
}

torch::Tensor mask_tensor(const BinaryMask& mask) {
    auto bytes = torch::from_blob(const_cast<std::uint8_t*>(mask.values().data()), {1, mask.height(), mask.width()},
                                  torch::kUInt8);
    return bytes.to(torch::kFloat32);
}

torch::Tensor quality_target(const QualityMap& q) {
    auto t = torch::empty({q.height(), q.width()}, torch::kInt64);
    auto* p = t.data_ptr<int64_t>();
    const auto v = q.values();
    for (std::size_t i = 0; i < v.size(); ++i) p[i] = channel_of(v[i]);
    return t;
}

torch::Tensor edge_target(const EdgeMap& e) {
    auto bytes = torch::from_blob(const_cast<std::uint8_t*>(e.mask().values().data()), {e.height(), e.width()},
                                  torch::kUInt8);
    return bytes.to(torch::kFloat32);
}

QualityMap quality_from_logits(const torch::Tensor& logits) {
    TORCH_CHECK(logits.dim() == 3 && logits.size(0) == 4, "expected (4, H, W) logits, got ", logits.sizes());
    const auto idx = logits.argmax(0).to(torch::kInt64).contiguous();
    QualityMap q(static_cast<int>(idx.size(0)), static_cast<int>(idx.size(1)));
    const auto* p = idx.data_ptr<int64_t>();
    auto out = q.values();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = class_at_channel(static_cast<int>(p[i]));
    return q;
}

EdgeMap edges_from_logits(const torch::Tensor& logits) {
    const auto t = logits.dim() == 3 ? logits.squeeze(0) : logits;
    TORCH_CHECK(t.dim() == 2, "expected (1, H, W) or (H, W) edge logits, got ", logits.sizes());
    // sigmoid(x) > 0.5 exactly when x > 0.
    const auto bits = (t > 0).to(torch::kUInt8).contiguous();
    return EdgeMap(BinaryMask::from_bytes(static_cast<int>(t.size(0)), static_cast<int>(t.size(1)),
                                          std::span<const std::uint8_t>(bits.data_ptr<uint8_t>(), bits.numel())));
}

}  // namespace pqm::model
