#pragma once

#include "pqm/raster.hpp"

#include <torch/torch.h>

#include <iosfwd>

namespace pqm::losses {

/// Per-class multipliers for the cross-entropy term.
struct ClassWeights {
    double tp = 0.5;
    double fp = 5.0;
    double tn = 0.1;
    double fn = 5.0;

    /// Throws std::invalid_argument on negative entries or all zeros.
    void validate() const;
    [[nodiscard]] double of(QualityClass c) const;
    /// (4,) tensor in logit channel order.
    [[nodiscard]] torch::Tensor tensor(torch::ScalarType dtype = torch::kFloat32) const;
};

/// What the "corrected" term compares against the ground-truth mask.
enum class CorrectionBase {
    /// S + FN - FP, with S the unchecked input mask.
    UncheckedMask,
    /// (TP + FP) + FN - FP, with the predicted foreground in place of S.
    PredictedForeground,
};

struct LossConfig {
    ClassWeights weights;
    double edge_lambda = 1.1;
    double dice_eps = 1e-6;
    CorrectionBase correction = CorrectionBase::UncheckedMask;
};

inline constexpr double kProbClamp = 1e-7;

/// Mean over pixels of -w[c] * log softmax(logits)[c] for the true channel c.
/// logits (B, 4, H, W); target (B, H, W) int64 channel indices.
torch::Tensor weighted_ce(const torch::Tensor& logits, const torch::Tensor& target, const ClassWeights& w);

/// Per-pixel edge/background balance weights for (B, H, W) or (H, W) edge
/// labels. Counts are taken per image.
torch::Tensor gamma_weights(const torch::Tensor& edge_gt, double lambda = 1.1);
Grid<double> gamma_weights(const EdgeMap& edge_gt, double lambda = 1.1);

struct EdgeLossParts {
    torch::Tensor bce;
    torch::Tensor dice;
    [[nodiscard]] torch::Tensor total() const { return bce + dice; }
};

/// Balanced BCE plus soft Dice (global per image, averaged over the batch).
/// logits (B, 1, H, W) or (B, H, W); edge_gt (B, H, W) in {0, 1}.
EdgeLossParts edge_loss_parts(const torch::Tensor& logits, const torch::Tensor& edge_gt, double lambda = 1.1,
                              double eps = 1e-6);
torch::Tensor edge_loss(const torch::Tensor& logits, const torch::Tensor& edge_gt, double lambda = 1.1,
                        double eps = 1e-6);

struct ReconstructionLosses {
    torch::Tensor pos;
    torch::Tensor neg;
    torch::Tensor seg;
};

/// Consistency between predicted class probabilities and the masks.
/// probs (B, 4, H, W) summing to one per pixel; unchecked and gt (B, H, W).
ReconstructionLosses reconstruction_losses(const torch::Tensor& probs, const torch::Tensor& unchecked,
                                           const torch::Tensor& gt,
                                           CorrectionBase base = CorrectionBase::UncheckedMask);

struct LossBreakdown {
    double ce = 0.0;
    double edge = 0.0;
    double pos = 0.0;
    double neg = 0.0;
    double seg = 0.0;
    double total = 0.0;
};

/// Unweighted sum of the five parts. Throws on non-finite input.
LossBreakdown total_loss(double ce, double edge, double pos, double neg, double seg);

struct LossTargets {
    torch::Tensor quality;    // (B, H, W) int64 channel indices
    torch::Tensor edges;      // (B, H, W) float
    torch::Tensor unchecked;  // (B, H, W) float
    torch::Tensor gt;         // (B, H, W) float
};

struct LossTerms {
    torch::Tensor ce, edge, pos, neg, seg;
    [[nodiscard]] torch::Tensor total() const { return ce + edge + pos + neg + seg; }
    [[nodiscard]] LossBreakdown breakdown() const;
};

LossTerms compute_losses(const torch::Tensor& assessment_logits, const torch::Tensor& edge_logits,
                         const LossTargets& targets, const LossConfig& cfg);

void write_loss_header(std::ostream& os);
void write_loss_row(std::ostream& os, long step, const LossBreakdown& b);

}  // namespace pqm::losses
