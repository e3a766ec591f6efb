#pragma once

#include "pqm/dataset.hpp"
#include "pqm/isometry.hpp"
#include "pqm/raster.hpp"
#include "pqm/training/mask_source.hpp"

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace pqm::training {

/// Transforms that augmented copies may draw from.
struct AugmentationPool {
    std::vector<Transform> transforms{kPoolTransforms.begin(), kPoolTransforms.end()};

    /// Throws std::invalid_argument when empty, duplicated, or holding a
    /// transform outside the rotation/flip pool.
    void validate() const;
    [[nodiscard]] std::size_t size() const { return transforms.size(); }
};

/// One (transform, source) assignment for an augmented copy.
struct Pairing {
    Transform transform;
    std::size_t source;
    friend bool operator==(const Pairing&, const Pairing&) = default;
};

/// Draws `n` pairings. When n fits in both the pool and the source list,
/// transforms and sources are each drawn without replacement and zipped;
/// otherwise n distinct pairs are drawn from the full product.
std::vector<Pairing> draw_pairings(std::size_t n, const AugmentationPool& pool, std::size_t source_count,
                                   std::mt19937_64& rng);

struct AugmentedItem {
    std::string sample_id;
    RgbImage image;
    BinaryMask unchecked;
    BinaryMask gt;
    QualityMap quality;
    EdgeMap edges;
    Transform transform = Transform::Identity;
    std::string source;
};

struct AugmentedBatch {
    std::vector<AugmentedItem> items;

    [[nodiscard]] std::size_t size() const { return items.size(); }
    /// "id:transform:source" per item, for diagnostics.
    [[nodiscard]] std::vector<std::string> provenance() const;
    void append(AugmentedBatch&& other);
};

/// Mixes a run seed with stream coordinates (splitmix64 finaliser).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0);

/// Builds one item for an explicit (transform, source) choice.
AugmentedItem augment_one(const data::SampleTriplet& sample, Transform t, const MaskSource& source,
                          std::uint64_t seed);

/// N transformed copies of one sample, each with a freshly generated unchecked
/// mask from its paired source. Pure function of its arguments.
AugmentedBatch build_augmented_batch(const data::SampleTriplet& sample, const AugmentationPool& pool,
                                     std::span<const MaskSourcePtr> sources, int n_aug, std::uint64_t seed);

}  // namespace pqm::training
