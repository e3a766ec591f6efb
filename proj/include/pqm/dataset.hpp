#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "pqm/core.hpp"
#include "pqm/raster.hpp"

namespace pqm::data {

/// (image, unchecked mask, ground-truth mask) with an identifier. The unchecked
/// mask is optional for training data whose masks are produced by mask sources.
struct SampleTriplet {
    std::string id;
    RgbImage image;
    std::optional<BinaryMask> unchecked;
    BinaryMask gt;
};

void validate(const SampleTriplet& s);

struct ManifestEntry {
    std::string id;
    std::filesystem::path image;
    std::optional<std::filesystem::path> unchecked;
    std::filesystem::path gt;
};

/// Line-oriented manifest: `id<TAB>image<TAB>unchecked|-<TAB>gt`. Relative
/// paths resolve against the manifest's directory. Blank lines and lines
/// starting with '#' are skipped.
struct DatasetManifest {
    std::filesystem::path root;
    std::vector<ManifestEntry> entries;

    static DatasetManifest load(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;

    [[nodiscard]] SampleTriplet load_sample(std::size_t i) const;
    [[nodiscard]] std::vector<SampleTriplet> load_all() const;
    /// Checks that every referenced file exists and that rasters agree in size.
    void verify() const;
};

// -- tiling ------------------------------------------------------------------

struct TileLayout {
    int rows = 0;
    int cols = 0;
    [[nodiscard]] int count() const { return rows * cols; }
};

/// Non-overlapping grid; residual margins are dropped. Throws if the tile
/// does not fit inside the raster.
TileLayout tile_layout(Size raster, int tile);

struct Tile {
    int row = 0;
    int col = 0;
    SampleTriplet sample;
};

/// Cuts a sample into tiles. With `drop_empty`, tiles whose ground truth is all
/// background are discarded. Tile ids are `<id>_r<row>_c<col>`.
std::vector<Tile> tile_dataset(const SampleTriplet& sample, int tile, bool drop_empty);

/// Mask-only tiling, for quick layout checks on very large rasters.
std::vector<BinaryMask> tile_mask(const BinaryMask& mask, int tile, bool drop_empty);

// -- statistics ----------------------------------------------------------------

/// Count-level summary from which every reported percentage is derived, so
/// that aggregates are exact pixel-weighted combinations.
struct StatCounts {
    ClassCounts classes;
    std::uint64_t errors = 0;
    std::uint64_t errors_near_edges = 0;
    std::uint64_t fg_inter = 0, fg_union = 0, bg_inter = 0, bg_union = 0;

    StatCounts& operator+=(const StatCounts& o);
};

StatCounts stat_counts(const BinaryMask& unchecked, const BinaryMask& gt, int radius,
                       EdgeSource source = EdgeSource::GroundTruth);

struct StatsRow {
    std::string id;
    ClassDistribution distribution;
    PercentageResult eib;
    double miou = 0.0;
};

StatsRow stats_row(const std::string& id, const StatCounts& c);

struct StatsReport {
    int radius = 3;
    std::vector<StatsRow> samples;
    StatsRow aggregate;
};

/// Throws std::invalid_argument listing the ids of entries without an unchecked mask.
StatsReport dataset_stats(const std::vector<SampleTriplet>& samples, int radius = 3,
                          EdgeSource source = EdgeSource::GroundTruth);
StatsReport dataset_stats(const DatasetManifest& manifest, int radius = 3,
                          EdgeSource source = EdgeSource::GroundTruth);

void write_stats_table(std::ostream& os, const StatsReport& report);

// -- quality-map rendering and codecs ------------------------------------------

/// Colour for each class: TP red, FP green, TN blue, FN cyan.
std::array<std::uint8_t, 3> class_color(QualityClass c);

/// Palette in index order (0=TN, 1=TP, 2=FP, 3=FN).
std::vector<std::array<std::uint8_t, 3>> quality_palette();

RgbImage render_quality_map(const QualityMap& q);
/// Inverse of render_quality_map; throws on colours outside the palette.
QualityMap decode_rendered(const RgbImage& rgb);

void write_quality_map(const std::filesystem::path& path, const QualityMap& q);
/// Accepts paletted files (indices) or RGB renderings.
QualityMap read_quality_map(const std::filesystem::path& path);

}  // namespace pqm::data
