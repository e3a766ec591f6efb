#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <vector>

#include "pqm/raster.hpp"

namespace pqm::io {

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Decoded PNG contents. For paletted files `channels` is 1 and `pixels` holds
/// palette indices; `palette` is then non-empty.
struct PngImage {
    int width = 0;
    int height = 0;
    int channels = 0;
    std::vector<std::uint8_t> pixels;
    std::vector<std::array<std::uint8_t, 3>> palette;

    [[nodiscard]] bool paletted() const { return !palette.empty(); }
};

PngImage read_png(const std::filesystem::path& path);

void write_gray_png(const std::filesystem::path& path, int width, int height, const std::vector<std::uint8_t>& pixels);
void write_rgb_png(const std::filesystem::path& path, const RgbImage& image);
void write_paletted_png(const std::filesystem::path& path, int width, int height,
                        const std::vector<std::uint8_t>& indices,
                        const std::vector<std::array<std::uint8_t, 3>>& palette);

/// Any non-zero sample (or non-black palette colour) is foreground.
BinaryMask read_mask(const std::filesystem::path& path);
/// Written as 0 / 255.
void write_mask(const std::filesystem::path& path, const BinaryMask& mask);

RgbImage read_rgb(const std::filesystem::path& path);

}  // namespace pqm::io
