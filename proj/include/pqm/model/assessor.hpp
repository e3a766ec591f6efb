#pragma once

#include "pqm/model/backbone.hpp"
#include "pqm/model/config.hpp"
#include "pqm/model/edge.hpp"
#include "pqm/raster.hpp"

#include <torch/torch.h>

#include <cstdint>
#include <vector>

namespace pqm::model {

struct AssessorOutput {
    torch::Tensor assessment;  // (B, 4, H, W) refined logits, channels TP, FP, TN, FN
    torch::Tensor coarse;      // (B, 4, H, W) decoder output before refinement
    EdgeOutput edges;
};

/// Image + unchecked mask in, four-class quality logits and edge logits out.
class QualityAssessorImpl : public torch::nn::Module {
public:
    explicit QualityAssessorImpl(const ModelConfig& cfg);

    /// image: normalised (B, 3, H, W); mask: (B, 1, H, W) in {0, 1}.
    AssessorOutput forward(const torch::Tensor& image, const torch::Tensor& mask);

    /// Redraws every parameter and the positional-encoding matrix from `seed`.
    void reset_parameters(uint64_t seed);
    /// Routes softmax maps of every attention layer into `probe` (null detaches).
    void attach_probe(AttentionProbe* probe);

    [[nodiscard]] const ModelConfig& config() const { return cfg_; }

    ImageEncoder encoder{nullptr};
    PromptEncoder prompt_encoder{nullptr};
    MaskDecoder decoder{nullptr};
    EdgeBranch edge_branch{nullptr};
    Refiner refiner{nullptr};

private:
    ModelConfig cfg_;
};
TORCH_MODULE(QualityAssessor);

/// Builds a model whose weights depend only on (cfg, seed).
QualityAssessor make_assessor(const ModelConfig& cfg, uint64_t seed);

/// (3, H, W) float tensor standardised with the config's channel statistics.
torch::Tensor image_tensor(const RgbImage& image, const ModelConfig& cfg);
/// (1, H, W) float tensor with values in {0, 1}.
torch::Tensor mask_tensor(const BinaryMask& mask);
/// (H, W) int64 tensor of channel indices (see channel_of).
torch::Tensor quality_target(const QualityMap& q);
/// (H, W) float tensor of edge labels.
torch::Tensor edge_target(const EdgeMap& e);

/// Per-pixel argmax over the channel axis of one (4, H, W) logit tensor.
QualityMap quality_from_logits(const torch::Tensor& logits);
/// sigmoid(logits) > 0.5 for one (1, H, W) or (H, W) tensor.
EdgeMap edges_from_logits(const torch::Tensor& logits);

}  // namespace pqm::model
