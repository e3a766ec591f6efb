#include "pqm/training/mask_source.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "pqm/core.hpp"

namespace pqm::training {

void CorruptionSpec::validate() const {
    if (std::abs(dilation) > 256) throw std::invalid_argument("corruption: |dilation| must be <= 256");
    if (!(jitter >= 0.0) || !std::isfinite(jitter)) throw std::invalid_argument("corruption: jitter must be >= 0");
    if (jitter_cell < 1) throw std::invalid_argument("corruption: jitter_cell must be >= 1");
    if (!(drop_probability >= 0.0 && drop_probability <= 1.0))
        throw std::invalid_argument("corruption: drop_probability must lie in [0, 1]");
    if (!(blob_rate >= 0.0) || !std::isfinite(blob_rate)) throw std::invalid_argument("corruption: blob_rate must be >= 0");
    if (blob_min_radius < 1 || blob_max_radius < blob_min_radius)
        throw std::invalid_argument("corruption: blob radii must satisfy 1 <= min <= max");
}

Grid<int> label_components(const BinaryMask& mask, int* count) {
    Grid<int> labels(mask.size(), 0);
    int next = 0;
    std::vector<std::pair<int, int>> stack;
    for (int y = 0; y < mask.height(); ++y) {
        for (int x = 0; x < mask.width(); ++x) {
            if (!mask(y, x) || labels(y, x) != 0) continue;
            ++next;
            stack.assign(1, {y, x});
            labels(y, x) = next;
            while (!stack.empty()) {
                const auto [cy, cx] = stack.back();
                stack.pop_back();
                constexpr int dy[] = {-1, 1, 0, 0};
                constexpr int dx[] = {0, 0, -1, 1};
                for (int k = 0; k < 4; ++k) {
                    const int ny = cy + dy[k];
                    const int nx = cx + dx[k];
                    if (mask.contains(ny, nx) && mask(ny, nx) && labels(ny, nx) == 0) {
                        labels(ny, nx) = next;
                        stack.emplace_back(ny, nx);
                    }
                }
            }
        }
    }
    if (count) *count = next;
    return labels;
}

SyntheticCorruptionSource::SyntheticCorruptionSource(std::string name, CorruptionSpec spec)
    : name_(std::move(name)), spec_(spec) {
    spec_.validate();
}

namespace {

BinaryMask drop_instances(const BinaryMask& m, double p, std::mt19937_64& rng) {
    if (p <= 0.0) return m;
    int n = 0;
    const Grid<int> labels = label_components(m, &n);
    std::bernoulli_distribution drop(p);
    std::vector<bool> dropped(static_cast<std::size_t>(n) + 1, false);
    for (int i = 1; i <= n; ++i) dropped[i] = drop(rng);
    BinaryMask out(m.size());
    for (int y = 0; y < m.height(); ++y)
        for (int x = 0; x < m.width(); ++x) out.set(y, x, m(y, x) && !dropped[labels(y, x)]);
    return out;
}

// Smooth random warp: displacement control points on a coarse lattice,
// bilinearly interpolated and rounded to whole pixels.
BinaryMask jitter_boundary(const BinaryMask& m, double amplitude, int cell, std::mt19937_64& rng) {
    if (amplitude <= 0.0) return m;
    const int gh = m.height() / cell + 2;
    const int gw = m.width() / cell + 2;
    std::uniform_real_distribution<double> u(-amplitude, amplitude);
    Grid<double> dy(gh, gw), dx(gh, gw);
    for (double& v : dy.values()) v = u(rng);
    for (double& v : dx.values()) v = u(rng);
    const auto sample = [&](const Grid<double>& g, double fy, double fx) {
        const int y0 = static_cast<int>(fy);
        const int x0 = static_cast<int>(fx);
        const double ty = fy - y0;
        const double tx = fx - x0;
        return (1 - ty) * ((1 - tx) * g(y0, x0) + tx * g(y0, x0 + 1)) +
               ty * ((1 - tx) * g(y0 + 1, x0) + tx * g(y0 + 1, x0 + 1));
    };
    BinaryMask out(m.size());
    for (int y = 0; y < m.height(); ++y) {
        for (int x = 0; x < m.width(); ++x) {
            const double fy = static_cast<double>(y) / cell;
            const double fx = static_cast<double>(x) / cell;
            const int sy = std::clamp(y + static_cast<int>(std::lround(sample(dy, fy, fx))), 0, m.height() - 1);
            const int sx = std::clamp(x + static_cast<int>(std::lround(sample(dx, fy, fx))), 0, m.width() - 1);
            out.set(y, x, m(sy, sx));
        }
    }
    return out;
}

void add_blobs(BinaryMask& m, const CorruptionSpec& spec, std::mt19937_64& rng) {
    if (spec.blob_rate <= 0.0) return;
    const int n = std::poisson_distribution<int>(spec.blob_rate)(rng);
    std::uniform_int_distribution<int> ry(0, m.height() - 1), rx(0, m.width() - 1);
    std::uniform_int_distribution<int> rr(spec.blob_min_radius, spec.blob_max_radius);
    for (int b = 0; b < n; ++b) {
        const int cy = ry(rng);
        const int cx = rx(rng);
        const int r = rr(rng);
        for (int y = std::max(0, cy - r); y <= std::min(m.height() - 1, cy + r); ++y)
            for (int x = std::max(0, cx - r); x <= std::min(m.width() - 1, cx + r); ++x)
                if ((y - cy) * (y - cy) + (x - cx) * (x - cx) <= r * r) m.set(y, x, true);
    }
}

}  // namespace

BinaryMask SyntheticCorruptionSource::generate(const SourceRequest& request) const {
    require_same_size(request.image.size(), request.gt.size(), "SyntheticCorruptionSource::generate");
    std::mt19937_64 rng(request.seed);
    BinaryMask m = drop_instances(request.gt, spec_.drop_probability, rng);
    if (spec_.dilation > 0) m = dilate_square(m, spec_.dilation);
    else if (spec_.dilation < 0) m = erode_square(m, -spec_.dilation);
    m = jitter_boundary(m, spec_.jitter, spec_.jitter_cell, rng);
    add_blobs(m, spec_, rng);
    return m;
}

BinaryMask ProvidedMaskSource::generate(const SourceRequest& request) const {
    if (!request.unchecked) throw std::invalid_argument("provided mask source: sample has no unchecked mask");
    require_same_size(request.image.size(), request.unchecked->size(), "ProvidedMaskSource::generate");
    return *request.unchecked;
}

MaskSourcePtr synthetic_mask_source(std::string name, const CorruptionSpec& spec) {
    return std::make_shared<SyntheticCorruptionSource>(std::move(name), spec);
}

std::vector<MaskSourcePtr> default_mask_sources() {
    CorruptionSpec swollen;
    swollen.dilation = 3;
    swollen.blob_rate = 0.5;
    swollen.blob_min_radius = 3;
    swollen.blob_max_radius = 6;

    CorruptionSpec shrunk;
    shrunk.dilation = -2;
    shrunk.drop_probability = 0.2;

    CorruptionSpec wobbly;
    wobbly.jitter = 3.0;
    wobbly.jitter_cell = 16;

    CorruptionSpec noisy;
    noisy.drop_probability = 0.15;
    noisy.blob_rate = 1.5;
    noisy.blob_min_radius = 3;
    noisy.blob_max_radius = 7;

    return {synthetic_mask_source("swollen", swollen), synthetic_mask_source("shrunk", shrunk),
            synthetic_mask_source("wobbly", wobbly), synthetic_mask_source("noisy", noisy)};
}

}  // namespace pqm::training
