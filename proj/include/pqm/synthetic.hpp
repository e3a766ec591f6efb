#pragma once

#include <cstdint>
#include <vector>

#include "pqm/dataset.hpp"
#include "pqm/raster.hpp"

namespace pqm::data {

/// Parameters for procedurally generated "aerial" tiles: flat-roofed
/// rectangular buildings on a textured background.
struct SceneSpec {
    int size = 64;
    int min_objects = 1;
    int max_objects = 4;
    int min_extent = 8;
    int max_extent = 24;
    /// Amplitude of per-pixel uniform noise added to every colour channel.
    int noise = 12;
};

/// Deterministic in `seed`; the image has no unchecked mask attached.
SampleTriplet synthetic_scene(const SceneSpec& spec, std::uint64_t seed, std::string id = "synthetic");

std::vector<SampleTriplet> synthetic_dataset(const SceneSpec& spec, int count, std::uint64_t seed);

}  // namespace pqm::data
