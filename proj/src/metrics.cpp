#include "pqm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <stdexcept>

namespace pqm::metrics {

BinaryConfusion& BinaryConfusion::operator+=(const BinaryConfusion& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    tn += o.tn;
    return *this;
}

BinaryConfusion per_class_confusion(const QualityMap& pred_q, const QualityMap& gt_q, QualityClass c) {
    require_same_size(pred_q.size(), gt_q.size(), "per_class_confusion");
    BinaryConfusion cm;
    const auto p = pred_q.values();
    const auto g = gt_q.values();
    for (std::size_t i = 0; i < p.size(); ++i) {
        const bool pc = p[i] == c;
        const bool gc = g[i] == c;
        if (pc && gc) ++cm.tp;
        else if (pc) ++cm.fp;
        else if (gc) ++cm.fn;
        else ++cm.tn;
    }
    return cm;
}

namespace {

Ratio percent(double num, double den) {
    if (den == 0.0) return {0.0, true};
    return {100.0 * num / den, false};
}

}  // namespace

ClassScores scores_from_confusion(const BinaryConfusion& cm) {
    ClassScores s;
    const double tp = static_cast<double>(cm.tp);
    const double fp = static_cast<double>(cm.fp);
    const double fn = static_cast<double>(cm.fn);
    s.precision = percent(tp, tp + fp);
    s.recall = percent(tp, tp + fn);
    // Harmonic mean of precision and recall; undefined unless both are.
    if (s.precision.undefined || s.recall.undefined) {
        s.f1 = {0.0, true};
    } else if (s.precision.value + s.recall.value == 0.0) {
        s.f1 = {0.0, false};
    } else {
        s.f1 = {2.0 * s.precision.value * s.recall.value / (s.precision.value + s.recall.value), false};
    }
    s.iou = percent(tp, tp + fp + fn);
    return s;
}

AssessmentReport report_from_scores(const std::array<ClassScores, 4>& per_class) {
    AssessmentReport r;
    r.per_class = per_class;
    double f1 = 0.0;
    double iou = 0.0;
    for (const ClassScores& s : per_class) {
        f1 += s.f1.value;
        iou += s.iou.value;
    }
    r.mf1 = f1 / 4.0;
    r.miou = iou / 4.0;
    return r;
}

AssessmentReport assessment_report(const QualityMap& pred_q, const QualityMap& gt_q) {
    std::array<ClassScores, 4> per_class;
    for (QualityClass c : kAllClasses)
        per_class[channel_of(c)] = scores_from_confusion(per_class_confusion(pred_q, gt_q, c));
    return report_from_scores(per_class);
}

void ReportAccumulator::add(const QualityMap& pred_q, const QualityMap& gt_q) {
    for (QualityClass c : kAllClasses) {
        const int i = channel_of(c);
        const BinaryConfusion cm = per_class_confusion(pred_q, gt_q, c);
        pooled_[i] += cm;
        const ClassScores s = scores_from_confusion(cm);
        score_sums_[i][0] += s.f1.value;
        score_sums_[i][1] += s.iou.value;
        pr_sums_[i][0] += s.precision.value;
        pr_sums_[i][1] += s.recall.value;
    }
    ++samples_;
}

AssessmentReport ReportAccumulator::result() const {
    std::array<ClassScores, 4> per_class;
    if (mode_ == Aggregation::PooledCounts || samples_ == 0) {
        for (int i = 0; i < 4; ++i) per_class[i] = scores_from_confusion(pooled_[i]);
        return report_from_scores(per_class);
    }
    const double n = static_cast<double>(samples_);
    for (int i = 0; i < 4; ++i) {
        per_class[i].precision = {pr_sums_[i][0] / n, false};
        per_class[i].recall = {pr_sums_[i][1] / n, false};
        per_class[i].f1 = {score_sums_[i][0] / n, false};
        per_class[i].iou = {score_sums_[i][1] / n, false};
    }
    return report_from_scores(per_class);
}

double mask_miou(const BinaryMask& pred, const BinaryMask& gt) {
    require_same_size(pred.size(), gt.size(), "mask_miou");
    std::uint64_t fg_inter = 0, fg_union = 0, bg_inter = 0, bg_union = 0;
    const auto p = pred.values();
    const auto g = gt.values();
    for (std::size_t i = 0; i < p.size(); ++i) {
        const bool pf = p[i] != 0;
        const bool gf = g[i] != 0;
        fg_inter += (pf && gf);
        fg_union += (pf || gf);
        bg_inter += (!pf && !gf);
        bg_union += (!pf || !gf);
    }
    // A class absent from both masks counts as 0 (matching the aggregate convention).
    const double fg = fg_union ? static_cast<double>(fg_inter) / fg_union : 0.0;
    const double bg = bg_union ? static_cast<double>(bg_inter) / bg_union : 0.0;
    return 100.0 * (fg + bg) / 2.0;
}

Correlation pearson_correlation(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw std::invalid_argument("pearson_correlation: series lengths differ");
    if (x.size() < 2) throw std::invalid_argument("pearson_correlation: need at least two points");
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) return {0.0, true};
    const double r = sxy / std::sqrt(sxx * syy);
    return {std::clamp(r, -1.0, 1.0), false};
}

void write_report_header(std::ostream& os, char sep) {
    os << "id";
    for (const char* c : kReportColumns) os << sep << c;
    os << '\n';
}

void write_report_row(std::ostream& os, const std::string& id, const AssessmentReport& r, char sep) {
    const auto flags = os.flags();
    os << id << std::fixed << std::setprecision(2);
    for (QualityClass c : kAllClasses) {
        const ClassScores& s = r.of(c);
        os << sep << s.f1.value << sep << s.iou.value;
    }
    os << sep << r.mf1 << sep << r.miou << '\n';
    os.flags(flags);
}

}  // namespace pqm::metrics
