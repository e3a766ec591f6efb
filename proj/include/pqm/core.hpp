#pragma once

#include <array>
#include <cstddef>

#include "pqm/raster.hpp"

namespace pqm {

/// Per-pixel truth table: (pred, gt) = (1,1) TP, (1,0) FP, (0,0) TN, (0,1) FN.
QualityMap derive_quality_map(const BinaryMask& gt, const BinaryMask& pred);

struct MaskPair {
    BinaryMask gt;
    BinaryMask pred;
};

/// Exact inverse of derive_quality_map: gt on {TP, FN}, pred on {TP, FP}.
MaskPair reconstruct_masks(const QualityMap& q);

/// Indicator map of a single class.
BinaryMask class_indicator(const QualityMap& q, QualityClass c);

/// Inner boundary: mask AND NOT erode(mask) with a 4-neighbourhood cross and
/// zero padding, so foreground pixels on the image border are always edges.
EdgeMap extract_edges(const BinaryMask& mask);

/// Pixels within Chebyshev distance `radius` of any edge pixel.
BinaryMask edge_buffer(const EdgeMap& edges, int radius);

/// Square (Chebyshev) dilation; the building block for edge_buffer.
BinaryMask dilate_square(const BinaryMask& mask, int radius);
BinaryMask erode_square(const BinaryMask& mask, int radius);

struct PercentageResult {
    double value = 0.0;
    /// Set when the quantity is 0/0; `value` is then 0.
    bool undefined = false;
};

/// Share (in percent) of error pixels (FP or FN) that lie within `radius` of the
/// supplied edges. Reports 0 with `undefined` set when there are no errors.
PercentageResult eib_at_k(const QualityMap& q, const EdgeMap& edges, int radius);

/// Which mask's boundary anchors the EIB buffer.
enum class EdgeSource { GroundTruth, Unchecked, Union };

/// Convenience overload deriving the edges from the masks encoded in `q`.
PercentageResult eib_at_k(const QualityMap& q, int radius, EdgeSource source = EdgeSource::GroundTruth);

EdgeMap edges_from(const BinaryMask& gt, const BinaryMask& unchecked, EdgeSource source);

/// Raw tallies behind eib_at_k, for exact aggregation across samples.
struct EibCounts {
    std::size_t errors = 0;
    std::size_t near = 0;
};
EibCounts eib_counts(const QualityMap& q, const EdgeMap& edges, int radius);

struct ClassCounts {
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;

    [[nodiscard]] std::size_t total() const { return tp + fp + tn + fn; }
    [[nodiscard]] std::size_t errors() const { return fp + fn; }
    [[nodiscard]] std::size_t of(QualityClass c) const;
    ClassCounts& operator+=(const ClassCounts& o);
};

ClassCounts count_classes(const QualityMap& q);

struct ClassDistribution {
    double pct_tp = 0, pct_fp = 0, pct_tn = 0, pct_fn = 0;
};

ClassDistribution class_distribution(const QualityMap& q);
ClassDistribution class_distribution(const ClassCounts& counts);

}  // namespace pqm
