#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "pqm/core.hpp"
#include "pqm/raster.hpp"

namespace pqm::metrics {

/// Foreground-vs-rest confusion counts for a single quality class.
struct BinaryConfusion {
    std::uint64_t tp = 0, fp = 0, fn = 0, tn = 0;

    [[nodiscard]] std::uint64_t total() const { return tp + fp + fn + tn; }
    BinaryConfusion& operator+=(const BinaryConfusion& o);
    friend bool operator==(const BinaryConfusion&, const BinaryConfusion&) = default;
};

/// A percentage that may be 0/0. Undefined values read as 0.
struct Ratio {
    double value = 0.0;
    bool undefined = false;
};

struct ClassScores {
    Ratio precision, recall, f1, iou;
};

BinaryConfusion per_class_confusion(const QualityMap& pred_q, const QualityMap& gt_q, QualityClass c);

ClassScores scores_from_confusion(const BinaryConfusion& cm);

struct AssessmentReport {
    /// Indexed by channel_of(class), i.e. TP, FP, TN, FN.
    std::array<ClassScores, 4> per_class{};
    double mf1 = 0.0;
    double miou = 0.0;

    [[nodiscard]] const ClassScores& of(QualityClass c) const { return per_class[channel_of(c)]; }
};

/// Builds a report from already-computed per-class scores (means over all four classes).
AssessmentReport report_from_scores(const std::array<ClassScores, 4>& per_class);

AssessmentReport assessment_report(const QualityMap& pred_q, const QualityMap& gt_q);

enum class Aggregation {
    /// Confusion counts are summed over all samples before scoring.
    PooledCounts,
    /// Each sample is scored on its own and the per-class values are averaged.
    PerImageMean,
};

/// Streaming accumulator over many (prediction, reference) quality-map pairs.
class ReportAccumulator {
public:
    explicit ReportAccumulator(Aggregation mode = Aggregation::PooledCounts) : mode_(mode) {}

    void add(const QualityMap& pred_q, const QualityMap& gt_q);
    [[nodiscard]] AssessmentReport result() const;
    [[nodiscard]] std::size_t samples() const { return samples_; }

private:
    Aggregation mode_;
    std::array<BinaryConfusion, 4> pooled_{};
    std::array<std::array<double, 2>, 4> score_sums_{};  // (f1, iou) per class
    std::array<std::array<double, 4>, 4> pr_sums_{};     // precision, recall bookkeeping
    std::size_t samples_ = 0;
};

/// Mean of foreground and background IoU between two binary masks, in percent.
double mask_miou(const BinaryMask& pred, const BinaryMask& gt);

struct Correlation {
    double r = 0.0;
    bool undefined = false;
};

/// Sample Pearson correlation. Throws on length mismatch or fewer than two points;
/// zero variance in either series yields an undefined result.
Correlation pearson_correlation(std::span<const double> x, std::span<const double> y);

/// Column order of the tabular report (after the leading id column).
inline constexpr std::array<const char*, 10> kReportColumns = {
    "F1_TP", "IoU_TP", "F1_FP", "IoU_FP", "F1_TN", "IoU_TN", "F1_FN", "IoU_FN", "mF1", "mIoU"};

void write_report_header(std::ostream& os, char sep = '\t');
void write_report_row(std::ostream& os, const std::string& id, const AssessmentReport& r, char sep = '\t');

}  // namespace pqm::metrics
