#include "pqm/losses.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>
#include <stdexcept>

namespace pqm::losses {

void ClassWeights::validate() const {
    const double all[] = {tp, fp, tn, fn};
    bool any = false;
    for (double v : all) {
        if (!(v >= 0.0) || !std::isfinite(v)) throw std::invalid_argument("class weights must be finite and non-negative");
        any = any || v > 0.0;
    }
    if (!any) throw std::invalid_argument("at least one class weight must be positive");
}

double ClassWeights::of(QualityClass c) const {
    switch (c) {
        case QualityClass::TP: return tp;
        case QualityClass::FP: return fp;
        case QualityClass::TN: return tn;
        case QualityClass::FN: return fn;
    }
    return 0.0;
}

torch::Tensor ClassWeights::tensor(torch::ScalarType dtype) const {
    std::vector<double> v(4);
    for (QualityClass c : kAllClasses) v[channel_of(c)] = of(c);
    return torch::tensor(v, torch::kFloat64).to(dtype);
}

namespace {

void require_finite(const torch::Tensor& t, const char* what) {
    if (!torch::isfinite(t).all().item<bool>()) throw std::invalid_argument(std::string(what) + " contains NaN or Inf");
}

torch::Tensor safe_log(const torch::Tensor& p) { return torch::log(p.clamp(kProbClamp, 1.0 - kProbClamp)); }

torch::Tensor as_batch(const torch::Tensor& t) { return t.dim() == 2 ? t.unsqueeze(0) : t; }

}  // namespace

torch::Tensor weighted_ce(const torch::Tensor& logits, const torch::Tensor& target, const ClassWeights& w) {
    TORCH_CHECK(logits.dim() == 4 && logits.size(1) == 4, "logits must be (B, 4, H, W), got ", logits.sizes());
    TORCH_CHECK(target.dim() == 3 && target.size(0) == logits.size(0) && target.size(1) == logits.size(2) &&
                    target.size(2) == logits.size(3),
                "target ", target.sizes(), " does not match logits ", logits.sizes());
    require_finite(logits, "assessment logits");
    w.validate();
    const auto probs = torch::softmax(logits, 1);
    const auto idx = target.to(torch::kInt64).unsqueeze(1);
    const auto true_prob = probs.gather(1, idx).squeeze(1);
    const auto weight = w.tensor(logits.scalar_type()).index({target.to(torch::kInt64)});
    return (-weight * safe_log(true_prob)).mean();
}

torch::Tensor gamma_weights(const torch::Tensor& edge_gt, double lambda) {
    const auto e = as_batch(edge_gt);
    const auto dims = std::vector<int64_t>{1, 2};
    const auto pos = e.sum(dims, true);
    const auto neg = (1.0 - e).sum(dims, true);
    const auto denom = (pos + neg).clamp_min(1.0);
    const auto on_edge = neg / denom;
    const auto on_background = lambda * pos / denom;
    auto gamma = e * on_edge + (1.0 - e) * on_background;
    return edge_gt.dim() == 2 ? gamma.squeeze(0) : gamma;
}

Grid<double> gamma_weights(const EdgeMap& edge_gt, double lambda) {
    const double pos = static_cast<double>(edge_gt.count());
    const double total = static_cast<double>(edge_gt.mask().area());
    const double neg = total - pos;
    Grid<double> out(edge_gt.size());
    for (int y = 0; y < edge_gt.height(); ++y)
        for (int x = 0; x < edge_gt.width(); ++x) out(y, x) = edge_gt(y, x) ? neg / total : lambda * pos / total;
    return out;
}

EdgeLossParts edge_loss_parts(const torch::Tensor& logits, const torch::Tensor& edge_gt, double lambda, double eps) {
    const auto l = logits.dim() == 4 ? logits.squeeze(1) : logits;
    const auto g = as_batch(edge_gt).to(l.scalar_type());
    TORCH_CHECK(l.sizes() == g.sizes(), "edge logits ", logits.sizes(), " do not match labels ", edge_gt.sizes());
    require_finite(l, "edge logits");
    const auto e = torch::sigmoid(l);
    const auto gamma = gamma_weights(g, lambda).detach();
    EdgeLossParts parts;
    parts.bce = (-gamma * ((1.0 - g) * safe_log(1.0 - e) + g * safe_log(e))).mean();
    const auto dims = std::vector<int64_t>{1, 2};
    const auto inter = (e * g).sum(dims);
    const auto dice = 1.0 - (2.0 * inter + eps) / (e.sum(dims) + g.sum(dims) + eps);
    parts.dice = dice.mean();
    return parts;
}

torch::Tensor edge_loss(const torch::Tensor& logits, const torch::Tensor& edge_gt, double lambda, double eps) {
    return edge_loss_parts(logits, edge_gt, lambda, eps).total();
}

ReconstructionLosses reconstruction_losses(const torch::Tensor& probs, const torch::Tensor& unchecked,
                                           const torch::Tensor& gt, CorrectionBase base) {
    TORCH_CHECK(probs.dim() == 4 && probs.size(1) == 4, "probabilities must be (B, 4, H, W), got ", probs.sizes());
    const auto s = as_batch(unchecked).to(probs.scalar_type());
    const auto sbar = as_batch(gt).to(probs.scalar_type());
    TORCH_CHECK(s.sizes() == sbar.sizes() && s.size(0) == probs.size(0) && s.size(1) == probs.size(2) &&
                    s.size(2) == probs.size(3),
                "masks do not align with probabilities ", probs.sizes());
    const double drift = (probs.sum(1) - 1.0).abs().max().item<double>();
    if (!(drift <= 1e-4))
        throw std::invalid_argument("class probabilities do not sum to one (max deviation " + std::to_string(drift) + ")");
    const auto tp = probs.select(1, channel_of(QualityClass::TP));
    const auto fp = probs.select(1, channel_of(QualityClass::FP));
    const auto tn = probs.select(1, channel_of(QualityClass::TN));
    const auto fn = probs.select(1, channel_of(QualityClass::FN));
    const auto corrected_base = base == CorrectionBase::UncheckedMask ? s : tp + fp;
    ReconstructionLosses r;
    r.pos = (tp + fn - sbar).pow(2).mean();
    r.neg = (fp + tn - (1.0 - sbar)).pow(2).mean();
    r.seg = (corrected_base + fn - fp - sbar).pow(2).mean();
    return r;
}

LossBreakdown total_loss(double ce, double edge, double pos, double neg, double seg) {
    for (double v : {ce, edge, pos, neg, seg})
        if (!std::isfinite(v)) throw std::invalid_argument("loss part is not finite");
    return {ce, edge, pos, neg, seg, ce + edge + pos + neg + seg};
}

LossBreakdown LossTerms::breakdown() const {
    const auto v = [](const torch::Tensor& t) { return t.item<double>(); };
    return total_loss(v(ce), v(edge), v(pos), v(neg), v(seg));
}

LossTerms compute_losses(const torch::Tensor& assessment_logits, const torch::Tensor& edge_logits,
                         const LossTargets& targets, const LossConfig& cfg) {
    LossTerms t;
    t.ce = weighted_ce(assessment_logits, targets.quality, cfg.weights);
    t.edge = edge_loss(edge_logits, targets.edges, cfg.edge_lambda, cfg.dice_eps);
    const auto r = reconstruction_losses(torch::softmax(assessment_logits, 1), targets.unchecked, targets.gt,
                                         cfg.correction);
    t.pos = r.pos;
    t.neg = r.neg;
    t.seg = r.seg;
    return t;
}

void write_loss_header(std::ostream& os) { os << "step\tce\tedge\tpos\tneg\tseg\ttotal\n"; }

void write_loss_row(std::ostream& os, long step, const LossBreakdown& b) {
    const auto flags = os.flags();
    const auto prec = os.precision();
    os << step << std::setprecision(9) << '\t' << b.ce << '\t' << b.edge << '\t' << b.pos << '\t' << b.neg << '\t'
       << b.seg << '\t' << b.total << '\n';
    os.flags(flags);
    os.precision(prec);
}

}  // namespace pqm::losses
