#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace pqm {

/// Raised whenever two rasters that must share a shape do not.
class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct Size {
    int height = 0;
    int width = 0;

    [[nodiscard]] std::size_t area() const { return static_cast<std::size_t>(height) * width; }
    friend bool operator==(const Size&, const Size&) = default;
};

std::string to_string(Size s);

/// Row-major single-channel raster.
template <typename T>
class Grid {
public:
    Grid() = default;
    Grid(int height, int width, T fill = T{})
        : size_{height, width}, data_(checked_area(height, width), fill) {}
    explicit Grid(Size s, T fill = T{}) : Grid(s.height, s.width, fill) {}

    [[nodiscard]] int height() const { return size_.height; }
    [[nodiscard]] int width() const { return size_.width; }
    [[nodiscard]] Size size() const { return size_; }
    [[nodiscard]] std::size_t area() const { return data_.size(); }

    T& operator()(int y, int x) { return data_[index(y, x)]; }
    const T& operator()(int y, int x) const { return data_[index(y, x)]; }

    [[nodiscard]] bool contains(int y, int x) const {
        return y >= 0 && x >= 0 && y < size_.height && x < size_.width;
    }

    std::span<T> values() { return data_; }
    std::span<const T> values() const { return data_; }

    friend bool operator==(const Grid&, const Grid&) = default;

private:
    static std::size_t checked_area(int h, int w) {
        if (h < 1 || w < 1) {
            throw ShapeError("raster dimensions must be positive, got " + std::to_string(h) + "x" +
                             std::to_string(w));
        }
        return static_cast<std::size_t>(h) * static_cast<std::size_t>(w);
    }
    [[nodiscard]] std::size_t index(int y, int x) const {
        return static_cast<std::size_t>(y) * size_.width + x;
    }

    Size size_{};
    std::vector<T> data_;
};

/// H x W grid over {0,1}. Any non-zero byte written through `set` is stored as 1.
class BinaryMask {
public:
    BinaryMask() = default;
    BinaryMask(int height, int width, bool fill = false) : grid_(height, width, fill ? 1 : 0) {}
    explicit BinaryMask(Size s, bool fill = false) : BinaryMask(s.height, s.width, fill) {}

    /// Thresholds any non-zero value to 1.
    static BinaryMask from_bytes(int height, int width, std::span<const std::uint8_t> bytes);
    /// Nested rows, convenient for small fixtures.
    static BinaryMask from_rows(const std::vector<std::vector<int>>& rows);

    [[nodiscard]] int height() const { return grid_.height(); }
    [[nodiscard]] int width() const { return grid_.width(); }
    [[nodiscard]] Size size() const { return grid_.size(); }
    [[nodiscard]] std::size_t area() const { return grid_.area(); }
    [[nodiscard]] bool contains(int y, int x) const { return grid_.contains(y, x); }

    [[nodiscard]] bool operator()(int y, int x) const { return grid_(y, x) != 0; }
    void set(int y, int x, bool v) { grid_(y, x) = v ? 1 : 0; }

    [[nodiscard]] std::size_t count() const;
    [[nodiscard]] bool empty() const { return count() == 0; }

    [[nodiscard]] std::span<const std::uint8_t> values() const { return grid_.values(); }
    [[nodiscard]] const Grid<std::uint8_t>& grid() const { return grid_; }

    friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

private:
    Grid<std::uint8_t> grid_;
};

/// One-pixel-wide object boundary map. Kept distinct from BinaryMask so that
/// edge-consuming operations cannot be handed a filled mask by accident.
class EdgeMap {
public:
    EdgeMap() = default;
    explicit EdgeMap(BinaryMask m) : mask_(std::move(m)) {}

    [[nodiscard]] int height() const { return mask_.height(); }
    [[nodiscard]] int width() const { return mask_.width(); }
    [[nodiscard]] Size size() const { return mask_.size(); }
    [[nodiscard]] bool operator()(int y, int x) const { return mask_(y, x); }
    [[nodiscard]] std::size_t count() const { return mask_.count(); }
    [[nodiscard]] const BinaryMask& mask() const { return mask_; }

    friend bool operator==(const EdgeMap&, const EdgeMap&) = default;

private:
    BinaryMask mask_;
};

/// Numeric values double as the palette indices of serialized quality maps.
enum class QualityClass : std::uint8_t { TN = 0, TP = 1, FP = 2, FN = 3 };

inline constexpr std::array<QualityClass, 4> kAllClasses = {QualityClass::TP, QualityClass::FP,
                                                            QualityClass::TN, QualityClass::FN};

/// Position of a class in the model's logit channels (TP, FP, TN, FN).
constexpr int channel_of(QualityClass c) {
    switch (c) {
        case QualityClass::TP: return 0;
        case QualityClass::FP: return 1;
        case QualityClass::TN: return 2;
        case QualityClass::FN: return 3;
    }
    return -1;
}

constexpr QualityClass class_at_channel(int channel) { return kAllClasses.at(channel); }

const char* class_name(QualityClass c);

using QualityMap = Grid<QualityClass>;

/// 8-bit RGB image, interleaved (y, x, channel).
class RgbImage {
public:
    RgbImage() = default;
    RgbImage(int height, int width, std::array<std::uint8_t, 3> fill = {0, 0, 0});

    [[nodiscard]] int height() const { return size_.height; }
    [[nodiscard]] int width() const { return size_.width; }
    [[nodiscard]] Size size() const { return size_; }

    std::uint8_t& at(int y, int x, int c) { return data_[index(y, x, c)]; }
    [[nodiscard]] std::uint8_t at(int y, int x, int c) const { return data_[index(y, x, c)]; }
    [[nodiscard]] std::array<std::uint8_t, 3> pixel(int y, int x) const {
        return {at(y, x, 0), at(y, x, 1), at(y, x, 2)};
    }
    void set_pixel(int y, int x, std::array<std::uint8_t, 3> rgb) {
        for (int c = 0; c < 3; ++c) at(y, x, c) = rgb[c];
    }

    std::span<std::uint8_t> bytes() { return data_; }
    [[nodiscard]] std::span<const std::uint8_t> bytes() const { return data_; }

    friend bool operator==(const RgbImage&, const RgbImage&) = default;

private:
    [[nodiscard]] std::size_t index(int y, int x, int c) const {
        return (static_cast<std::size_t>(y) * size_.width + x) * 3 + c;
    }

    Size size_{};
    std::vector<std::uint8_t> data_;
};

void require_same_size(Size a, Size b, const char* what);

}  // namespace pqm
