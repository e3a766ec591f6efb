#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "pqm/raster.hpp"

namespace pqm::training {

/// Everything a source may look at when producing an unchecked mask for one
/// augmented copy. `gt` and `unchecked` are already transformed to match `image`.
struct SourceRequest {
    const RgbImage& image;
    const BinaryMask& gt;
    /// The sample's own unchecked mask, when the dataset provides one.
    const BinaryMask* unchecked = nullptr;
    std::uint64_t seed = 0;
};

/// Producer of unchecked segmentation masks. Implementations must be
/// deterministic in (request contents, seed) and return a mask the size of the image.
class MaskSource {
public:
    virtual ~MaskSource() = default;
    [[nodiscard]] virtual std::string name() const = 0;
    [[nodiscard]] virtual BinaryMask generate(const SourceRequest& request) const = 0;
};

using MaskSourcePtr = std::shared_ptr<const MaskSource>;

/// Corruption recipe applied to the ground truth, in this order: instance
/// drop, dilation/erosion, boundary jitter, blob addition.
struct CorruptionSpec {
    /// Positive dilates, negative erodes (square structuring element).
    int dilation = 0;
    /// Maximum displacement in pixels of the smooth warp applied to the mask.
    double jitter = 0.0;
    /// Control-point spacing of the warp field, in pixels.
    int jitter_cell = 8;
    /// Probability that each 4-connected foreground component is removed.
    double drop_probability = 0.0;
    /// Expected number of spurious blobs per image (Poisson).
    double blob_rate = 0.0;
    int blob_min_radius = 2;
    int blob_max_radius = 5;

    /// Throws std::invalid_argument on out-of-range values.
    void validate() const;
};

class SyntheticCorruptionSource final : public MaskSource {
public:
    SyntheticCorruptionSource(std::string name, CorruptionSpec spec);

    [[nodiscard]] std::string name() const override { return name_; }
    [[nodiscard]] BinaryMask generate(const SourceRequest& request) const override;
    [[nodiscard]] const CorruptionSpec& spec() const { return spec_; }

private:
    std::string name_;
    CorruptionSpec spec_;
};

/// Returns the dataset's own unchecked mask (e.g. produced offline by an
/// external segmentation model and stored on disk).
class ProvidedMaskSource final : public MaskSource {
public:
    [[nodiscard]] std::string name() const override { return "provided"; }
    [[nodiscard]] BinaryMask generate(const SourceRequest& request) const override;
};

MaskSourcePtr synthetic_mask_source(std::string name, const CorruptionSpec& spec);

/// A small, varied set of corruptors used by default for desk-scale training.
std::vector<MaskSourcePtr> default_mask_sources();

/// 4-connected foreground components, labelled 1..n (0 is background).
Grid<int> label_components(const BinaryMask& mask, int* count = nullptr);

}  // namespace pqm::training
