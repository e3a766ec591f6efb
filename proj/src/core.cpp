#include "pqm/core.hpp"

#include <algorithm>
#include <stdexcept>

namespace pqm {

QualityMap derive_quality_map(const BinaryMask& gt, const BinaryMask& pred) {
    require_same_size(gt.size(), pred.size(), "derive_quality_map");
    QualityMap q(gt.size(), QualityClass::TN);
    for (int y = 0; y < gt.height(); ++y) {
        for (int x = 0; x < gt.width(); ++x) {
            const bool g = gt(y, x);
            const bool p = pred(y, x);
            q(y, x) = p ? (g ? QualityClass::TP : QualityClass::FP) : (g ? QualityClass::FN : QualityClass::TN);
        }
    }
    return q;
}

MaskPair reconstruct_masks(const QualityMap& q) {
    MaskPair out{BinaryMask(q.size()), BinaryMask(q.size())};
    for (int y = 0; y < q.height(); ++y) {
        for (int x = 0; x < q.width(); ++x) {
            const QualityClass c = q(y, x);
            out.gt.set(y, x, c == QualityClass::TP || c == QualityClass::FN);
            out.pred.set(y, x, c == QualityClass::TP || c == QualityClass::FP);
        }
    }
    return out;
}

BinaryMask class_indicator(const QualityMap& q, QualityClass c) {
    BinaryMask m(q.size());
    for (int y = 0; y < q.height(); ++y)
        for (int x = 0; x < q.width(); ++x) m.set(y, x, q(y, x) == c);
    return m;
}

EdgeMap extract_edges(const BinaryMask& mask) {
    BinaryMask edges(mask.size());
    const auto fg = [&](int y, int x) { return mask.contains(y, x) && mask(y, x); };
    for (int y = 0; y < mask.height(); ++y) {
        for (int x = 0; x < mask.width(); ++x) {
            if (!mask(y, x)) continue;
            const bool interior = fg(y - 1, x) && fg(y + 1, x) && fg(y, x - 1) && fg(y, x + 1);
            edges.set(y, x, !interior);
        }
    }
    return EdgeMap(std::move(edges));
}

namespace {

// Separable running-window max (dilation) along one axis.
BinaryMask sweep(const BinaryMask& in, int radius, bool horizontal, bool want) {
    BinaryMask out(in.size(), !want);
    const int h = in.height();
    const int w = in.width();
    const int lines = horizontal ? h : w;
    const int len = horizontal ? w : h;
    std::vector<int> prefix(static_cast<std::size_t>(len) + 1);
    for (int l = 0; l < lines; ++l) {
        prefix[0] = 0;
        for (int i = 0; i < len; ++i) {
            const bool v = horizontal ? in(l, i) : in(i, l);
            prefix[i + 1] = prefix[i] + (v == want ? 1 : 0);
        }
        for (int i = 0; i < len; ++i) {
            const int lo = std::max(0, i - radius);
            const int hi = std::min(len - 1, i + radius);
            if (prefix[hi + 1] - prefix[lo] > 0) {
                if (horizontal) out.set(l, i, want);
                else out.set(i, l, want);
            }
        }
    }
    return out;
}

}  // namespace

BinaryMask dilate_square(const BinaryMask& mask, int radius) {
    if (radius < 0) throw std::invalid_argument("dilate_square: radius must be non-negative");
    if (radius == 0) return mask;
    return sweep(sweep(mask, radius, true, true), radius, false, true);
}

BinaryMask erode_square(const BinaryMask& mask, int radius) {
    if (radius < 0) throw std::invalid_argument("erode_square: radius must be non-negative");
    if (radius == 0) return mask;
    // Pixels outside the raster count as background.
    BinaryMask out = sweep(sweep(mask, radius, true, false), radius, false, false);
    for (int y = 0; y < mask.height(); ++y) {
        for (int x = 0; x < mask.width(); ++x) {
            if (y < radius || x < radius || y >= mask.height() - radius || x >= mask.width() - radius)
                out.set(y, x, false);
        }
    }
    return out;
}

BinaryMask edge_buffer(const EdgeMap& edges, int radius) {
    if (radius < 0) throw std::invalid_argument("edge_buffer: radius must be non-negative");
    return dilate_square(edges.mask(), radius);
}

EibCounts eib_counts(const QualityMap& q, const EdgeMap& edges, int radius) {
    require_same_size(q.size(), edges.size(), "eib_at_k");
    const BinaryMask buffer = edge_buffer(edges, radius);
    EibCounts c;
    for (int y = 0; y < q.height(); ++y) {
        for (int x = 0; x < q.width(); ++x) {
            const QualityClass v = q(y, x);
            if (v != QualityClass::FP && v != QualityClass::FN) continue;
            ++c.errors;
            if (buffer(y, x)) ++c.near;
        }
    }
    return c;
}

PercentageResult eib_at_k(const QualityMap& q, const EdgeMap& edges, int radius) {
    const EibCounts c = eib_counts(q, edges, radius);
    if (c.errors == 0) return {0.0, true};
    return {100.0 * static_cast<double>(c.near) / static_cast<double>(c.errors), false};
}

EdgeMap edges_from(const BinaryMask& gt, const BinaryMask& unchecked, EdgeSource source) {
    require_same_size(gt.size(), unchecked.size(), "edges_from");
    switch (source) {
        case EdgeSource::GroundTruth: return extract_edges(gt);
        case EdgeSource::Unchecked: return extract_edges(unchecked);
        case EdgeSource::Union: {
            const EdgeMap a = extract_edges(gt);
            const EdgeMap b = extract_edges(unchecked);
            BinaryMask u(gt.size());
            for (int y = 0; y < gt.height(); ++y)
                for (int x = 0; x < gt.width(); ++x) u.set(y, x, a(y, x) || b(y, x));
            return EdgeMap(std::move(u));
        }
    }
    throw std::invalid_argument("unknown edge source");
}

PercentageResult eib_at_k(const QualityMap& q, int radius, EdgeSource source) {
    const MaskPair masks = reconstruct_masks(q);
    return eib_at_k(q, edges_from(masks.gt, masks.pred, source), radius);
}

std::size_t ClassCounts::of(QualityClass c) const {
    switch (c) {
        case QualityClass::TP: return tp;
        case QualityClass::FP: return fp;
        case QualityClass::TN: return tn;
        case QualityClass::FN: return fn;
    }
    return 0;
}

ClassCounts& ClassCounts::operator+=(const ClassCounts& o) {
    tp += o.tp;
    fp += o.fp;
    tn += o.tn;
    fn += o.fn;
    return *this;
}

ClassCounts count_classes(const QualityMap& q) {
    ClassCounts c;
    for (QualityClass v : q.values()) {
        switch (v) {
            case QualityClass::TP: ++c.tp; break;
            case QualityClass::FP: ++c.fp; break;
            case QualityClass::TN: ++c.tn; break;
            case QualityClass::FN: ++c.fn; break;
        }
    }
    return c;
}

ClassDistribution class_distribution(const ClassCounts& counts) {
    const double n = static_cast<double>(counts.total());
    if (n == 0) return {};
    return {100.0 * counts.tp / n, 100.0 * counts.fp / n, 100.0 * counts.tn / n, 100.0 * counts.fn / n};
}

ClassDistribution class_distribution(const QualityMap& q) { return class_distribution(count_classes(q)); }

}  // namespace pqm
