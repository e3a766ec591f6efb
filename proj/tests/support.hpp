#pragma once

#include "pqm/raster.hpp"

#include <random>
#include <vector>

namespace pqm::test {

inline BinaryMask random_mask(std::mt19937_64& rng, int h, int w, double p = 0.5) {
    std::bernoulli_distribution bit(p);
    BinaryMask m(h, w);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) m.set(y, x, bit(rng));
    return m;
}

inline QualityMap random_quality(std::mt19937_64& rng, int h, int w) {
    std::uniform_int_distribution<int> cls(0, 3);
    QualityMap q(h, w);
    for (auto& v : q.values()) v = static_cast<QualityClass>(cls(rng));
    return q;
}

inline RgbImage random_image(std::mt19937_64& rng, int h, int w) {
    std::uniform_int_distribution<int> byte(0, 255);
    RgbImage img(h, w);
    for (auto& b : img.bytes()) b = static_cast<std::uint8_t>(byte(rng));
    return img;
}

inline BinaryMask square(int h, int w, int y0, int x0, int side) {
    BinaryMask m(h, w);
    for (int y = y0; y < y0 + side; ++y)
        for (int x = x0; x < x0 + side; ++x)
            if (m.contains(y, x)) m.set(y, x, true);
    return m;
}

inline QualityMap quality_from_rows(const std::vector<std::vector<QualityClass>>& rows) {
    QualityMap q(static_cast<int>(rows.size()), static_cast<int>(rows.front().size()));
    for (int y = 0; y < q.height(); ++y)
        for (int x = 0; x < q.width(); ++x) q(y, x) = rows[y][x];
    return q;
}

}  // namespace pqm::test
