#include "pqm/synthetic.hpp"

#include <algorithm>
#include <random>
#include <stdexcept>

namespace pqm::data {

SampleTriplet synthetic_scene(const SceneSpec& spec, std::uint64_t seed, std::string id) {
    if (spec.size < 8 || spec.min_extent < 1 || spec.max_extent < spec.min_extent || spec.min_objects < 0 ||
        spec.max_objects < spec.min_objects) {
        throw std::invalid_argument("synthetic_scene: inconsistent scene spec");
    }
    std::mt19937_64 rng(seed);
    const auto uniform = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };

    SampleTriplet s;
    s.id = std::move(id);
    s.gt = BinaryMask(spec.size, spec.size);
    s.image = RgbImage(spec.size, spec.size);

    const std::array<std::uint8_t, 3> ground = {static_cast<std::uint8_t>(uniform(60, 90)),
                                                static_cast<std::uint8_t>(uniform(100, 130)),
                                                static_cast<std::uint8_t>(uniform(50, 80))};
    const int extent_cap = std::min(spec.max_extent, spec.size - 2);
    const int objects = uniform(spec.min_objects, spec.max_objects);
    std::vector<std::array<std::uint8_t, 3>> roof(objects);
    std::vector<std::array<int, 4>> boxes(objects);
    for (int i = 0; i < objects; ++i) {
        const int h = uniform(std::min(spec.min_extent, extent_cap), extent_cap);
        const int w = uniform(std::min(spec.min_extent, extent_cap), extent_cap);
        const int y0 = uniform(1, spec.size - h - 1);
        const int x0 = uniform(1, spec.size - w - 1);
        boxes[i] = {y0, x0, h, w};
        const int base = uniform(150, 220);
        roof[i] = {static_cast<std::uint8_t>(base), static_cast<std::uint8_t>(base - uniform(20, 60)),
                   static_cast<std::uint8_t>(base - uniform(40, 90))};
    }

    for (int y = 0; y < spec.size; ++y) {
        for (int x = 0; x < spec.size; ++x) {
            std::array<std::uint8_t, 3> c = ground;
            for (int i = 0; i < objects; ++i) {
                const auto& b = boxes[i];
                if (y >= b[0] && y < b[0] + b[2] && x >= b[1] && x < b[1] + b[3]) {
                    c = roof[i];
                    s.gt.set(y, x, true);
                }
            }
            for (int ch = 0; ch < 3; ++ch) {
                const int v = c[ch] + uniform(-spec.noise, spec.noise);
                s.image.at(y, x, ch) = static_cast<std::uint8_t>(std::clamp(v, 0, 255));
            }
        }
    }
    return s;
}

std::vector<SampleTriplet> synthetic_dataset(const SceneSpec& spec, int count, std::uint64_t seed) {
    std::vector<SampleTriplet> out;
    std::vector<std::uint64_t> seeds(static_cast<std::size_t>(std::max(count, 0)));
    std::mt19937_64 rng(seed);
    for (auto& s : seeds) s = rng();
    for (int i = 0; i < count; ++i) out.push_back(synthetic_scene(spec, seeds[i], "syn" + std::to_string(i)));
    return out;
}

}  // namespace pqm::data
