#include "pqm/raster.hpp"

#include <numeric>

namespace pqm {

std::string to_string(Size s) { return std::to_string(s.height) + "x" + std::to_string(s.width); }

void require_same_size(Size a, Size b, const char* what) {
    if (a != b) {
        throw ShapeError(std::string(what) + ": shape mismatch " + to_string(a) + " vs " + to_string(b));
    }
}

BinaryMask BinaryMask::from_bytes(int height, int width, std::span<const std::uint8_t> bytes) {
    BinaryMask m(height, width);
    if (bytes.size() != m.area()) {
        throw ShapeError("BinaryMask::from_bytes: expected " + std::to_string(m.area()) + " bytes, got " +
                         std::to_string(bytes.size()));
    }
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) m.set(y, x, bytes[static_cast<std::size_t>(y) * width + x] != 0);
    return m;
}

BinaryMask BinaryMask::from_rows(const std::vector<std::vector<int>>& rows) {
    if (rows.empty() || rows.front().empty()) throw ShapeError("BinaryMask::from_rows: empty input");
    const int h = static_cast<int>(rows.size());
    const int w = static_cast<int>(rows.front().size());
    BinaryMask m(h, w);
    for (int y = 0; y < h; ++y) {
        if (static_cast<int>(rows[y].size()) != w) throw ShapeError("BinaryMask::from_rows: ragged rows");
        for (int x = 0; x < w; ++x) m.set(y, x, rows[y][x] != 0);
    }
    return m;
}

std::size_t BinaryMask::count() const {
    const auto v = grid_.values();
    return static_cast<std::size_t>(std::count(v.begin(), v.end(), std::uint8_t{1}));
}

const char* class_name(QualityClass c) {
    switch (c) {
        case QualityClass::TP: return "TP";
        case QualityClass::FP: return "FP";
        case QualityClass::TN: return "TN";
        case QualityClass::FN: return "FN";
    }
    return "?";
}

RgbImage::RgbImage(int height, int width, std::array<std::uint8_t, 3> fill) : size_{height, width} {
    if (height < 1 || width < 1) throw ShapeError("RgbImage: dimensions must be positive");
    data_.resize(size_.area() * 3);
    for (std::size_t i = 0; i < size_.area(); ++i)
        for (int c = 0; c < 3; ++c) data_[i * 3 + c] = fill[c];
}

}  // namespace pqm
