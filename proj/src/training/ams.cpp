#include "pqm/training/ams.hpp"

#include "pqm/core.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <stdexcept>

namespace pqm::training {

void AugmentationPool::validate() const {
    if (transforms.empty()) throw std::invalid_argument("augmentation pool is empty");
    std::set<Transform> seen;
    for (Transform t : transforms) {
        if (!in_pool(t))
            throw std::invalid_argument("transform " + std::string(transform_name(t)) + " is not a pool member");
        if (!seen.insert(t).second)
            throw std::invalid_argument("transform " + std::string(transform_name(t)) + " listed twice");
    }
}

namespace {

/// First k entries of a uniformly shuffled 0..n-1.
std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k, std::mt19937_64& rng) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t i = 0; i < k; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, n - 1);
        std::swap(idx[i], idx[pick(rng)]);
    }
    idx.resize(k);
    return idx;
}

}  // namespace

std::vector<Pairing> draw_pairings(std::size_t n, const AugmentationPool& pool, std::size_t source_count,
                                   std::mt19937_64& rng) {
    pool.validate();
    if (source_count == 0) throw std::invalid_argument("no mask sources configured");
    if (n == 0) throw std::invalid_argument("augmentation count must be positive");
    if (n > pool.size() * source_count)
        throw std::invalid_argument("augmentation count " + std::to_string(n) + " exceeds pool size x source count (" +
                                    std::to_string(pool.size() * source_count) + ")");
    std::vector<Pairing> out;
    if (n <= pool.size() && n <= source_count) {
        const auto ts = sample_without_replacement(pool.size(), n, rng);
        const auto ss = sample_without_replacement(source_count, n, rng);
        for (std::size_t i = 0; i < n; ++i) out.push_back({pool.transforms[ts[i]], ss[i]});
    } else {
        for (std::size_t k : sample_without_replacement(pool.size() * source_count, n, rng))
            out.push_back({pool.transforms[k / source_count], k % source_count});
    }
    return out;
}

std::vector<std::string> AugmentedBatch::provenance() const {
    std::vector<std::string> out;
    out.reserve(items.size());
    for (const auto& it : items)
        out.push_back(it.sample_id + ":" + std::string(transform_name(it.transform)) + ":" + it.source);
    return out;
}

void AugmentedBatch::append(AugmentedBatch&& other) {
    for (auto& it : other.items) items.push_back(std::move(it));
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b, std::uint64_t c) {
    const auto mix = [](std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    };
    std::uint64_t h = mix(seed);
    h = mix(h ^ a);
    h = mix(h ^ b);
    return mix(h ^ c);
}

AugmentedItem augment_one(const data::SampleTriplet& sample, Transform t, const MaskSource& source,
                          std::uint64_t seed) {
    AugmentedItem item;
    item.sample_id = sample.id;
    item.transform = t;
    item.source = source.name();
    item.image = apply_transform(t, sample.image);
    item.gt = apply_transform(t, sample.gt);
    std::optional<BinaryMask> unchecked;
    if (sample.unchecked) unchecked = apply_transform(t, *sample.unchecked);
    item.unchecked = source.generate({item.image, item.gt, unchecked ? &*unchecked : nullptr, seed});
    require_same_size(item.unchecked.size(), item.image.size(), "mask source output");
    item.quality = derive_quality_map(item.gt, item.unchecked);
    item.edges = extract_edges(item.gt);
    return item;
}

AugmentedBatch build_augmented_batch(const data::SampleTriplet& sample, const AugmentationPool& pool,
                                     std::span<const MaskSourcePtr> sources, int n_aug, std::uint64_t seed) {
    if (sources.empty()) throw std::invalid_argument("no mask sources configured");
    if (n_aug < 1) throw std::invalid_argument("augmentation count must be positive");
    std::mt19937_64 rng(seed);
    const auto pairs = draw_pairings(static_cast<std::size_t>(n_aug), pool, sources.size(), rng);
    AugmentedBatch batch;
    for (std::size_t i = 0; i < pairs.size(); ++i)
        batch.items.push_back(augment_one(sample, pairs[i].transform, *sources[pairs[i].source], derive_seed(seed, i)));
    return batch;
}

}  // namespace pqm::training
