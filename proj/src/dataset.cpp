#include "pqm/dataset.hpp"

#include <fstream>
#include <iomanip>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "pqm/io/png.hpp"

namespace pqm::data {

namespace fs = std::filesystem;

void validate(const SampleTriplet& s) {
    require_same_size(s.image.size(), s.gt.size(), ("sample '" + s.id + "' image/gt").c_str());
    if (s.unchecked) require_same_size(s.gt.size(), s.unchecked->size(), ("sample '" + s.id + "' gt/unchecked").c_str());
}

// -- manifest --------------------------------------------------------------------

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find('\t', start);
        out.push_back(line.substr(start, pos - start));
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    return out;
}

fs::path resolve(const fs::path& root, const std::string& p) {
    const fs::path path(p);
    return path.is_absolute() ? path : root / path;
}

}  // namespace

DatasetManifest DatasetManifest::load(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw io::IoError("cannot open manifest '" + path.string() + "'");
    DatasetManifest m;
    m.root = path.parent_path();
    std::set<std::string> seen;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        const auto cols = split_tabs(line);
        if (cols.size() != 4) {
            throw std::invalid_argument(path.string() + ":" + std::to_string(lineno) +
                                        ": expected 4 tab-separated columns, got " + std::to_string(cols.size()));
        }
        if (!seen.insert(cols[0]).second)
            throw std::invalid_argument(path.string() + ":" + std::to_string(lineno) + ": duplicate id '" + cols[0] + "'");
        ManifestEntry e;
        e.id = cols[0];
        e.image = resolve(m.root, cols[1]);
        if (cols[2] != "-") e.unchecked = resolve(m.root, cols[2]);
        e.gt = resolve(m.root, cols[3]);
        m.entries.push_back(std::move(e));
    }
    return m;
}

void DatasetManifest::save(const fs::path& path) const {
    std::ofstream out(path);
    if (!out) throw io::IoError("cannot write manifest '" + path.string() + "'");
    const fs::path base = path.parent_path();
    const auto rel = [&](const fs::path& p) { return base.empty() ? p.string() : fs::relative(p, base).string(); };
    for (const ManifestEntry& e : entries) {
        out << e.id << '\t' << rel(e.image) << '\t' << (e.unchecked ? rel(*e.unchecked) : std::string("-")) << '\t'
            << rel(e.gt) << '\n';
    }
}

SampleTriplet DatasetManifest::load_sample(std::size_t i) const {
    const ManifestEntry& e = entries.at(i);
    SampleTriplet s;
    s.id = e.id;
    s.image = io::read_rgb(e.image);
    s.gt = io::read_mask(e.gt);
    if (e.unchecked) s.unchecked = io::read_mask(*e.unchecked);
    validate(s);
    return s;
}

std::vector<SampleTriplet> DatasetManifest::load_all() const {
    std::vector<SampleTriplet> out;
    out.reserve(entries.size());
    for (std::size_t i = 0; i < entries.size(); ++i) out.push_back(load_sample(i));
    return out;
}

void DatasetManifest::verify() const {
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const ManifestEntry& e = entries[i];
        for (const fs::path* p : {&e.image, &e.gt})
            if (!fs::exists(*p)) throw io::IoError("manifest entry '" + e.id + "': missing file " + p->string());
        if (e.unchecked && !fs::exists(*e.unchecked))
            throw io::IoError("manifest entry '" + e.id + "': missing file " + e.unchecked->string());
        (void)load_sample(i);
    }
}

// -- tiling ----------------------------------------------------------------------

TileLayout tile_layout(Size raster, int tile) {
    if (tile < 1) throw std::invalid_argument("tile size must be positive");
    if (tile > std::min(raster.height, raster.width)) {
        throw std::invalid_argument("tile size " + std::to_string(tile) + " exceeds raster " + to_string(raster));
    }
    return {raster.height / tile, raster.width / tile};
}

namespace {

BinaryMask crop(const BinaryMask& m, int y0, int x0, int tile) {
    BinaryMask out(tile, tile);
    for (int y = 0; y < tile; ++y)
        for (int x = 0; x < tile; ++x) out.set(y, x, m(y0 + y, x0 + x));
    return out;
}

RgbImage crop(const RgbImage& img, int y0, int x0, int tile) {
    RgbImage out(tile, tile);
    for (int y = 0; y < tile; ++y)
        for (int x = 0; x < tile; ++x) out.set_pixel(y, x, img.pixel(y0 + y, x0 + x));
    return out;
}

}  // namespace

std::vector<Tile> tile_dataset(const SampleTriplet& sample, int tile, bool drop_empty) {
    validate(sample);
    const TileLayout layout = tile_layout(sample.gt.size(), tile);
    std::vector<Tile> tiles;
    for (int r = 0; r < layout.rows; ++r) {
        for (int c = 0; c < layout.cols; ++c) {
            BinaryMask gt = crop(sample.gt, r * tile, c * tile, tile);
            if (drop_empty && gt.empty()) continue;
            Tile t;
            t.row = r;
            t.col = c;
            t.sample.id = sample.id + "_r" + std::to_string(r) + "_c" + std::to_string(c);
            t.sample.image = crop(sample.image, r * tile, c * tile, tile);
            if (sample.unchecked) t.sample.unchecked = crop(*sample.unchecked, r * tile, c * tile, tile);
            t.sample.gt = std::move(gt);
            tiles.push_back(std::move(t));
        }
    }
    return tiles;
}

std::vector<BinaryMask> tile_mask(const BinaryMask& mask, int tile, bool drop_empty) {
    const TileLayout layout = tile_layout(mask.size(), tile);
    std::vector<BinaryMask> out;
    for (int r = 0; r < layout.rows; ++r) {
        for (int c = 0; c < layout.cols; ++c) {
            BinaryMask t = crop(mask, r * tile, c * tile, tile);
            if (drop_empty && t.empty()) continue;
            out.push_back(std::move(t));
        }
    }
    return out;
}

// -- statistics ------------------------------------------------------------------

StatCounts& StatCounts::operator+=(const StatCounts& o) {
    classes += o.classes;
    errors += o.errors;
    errors_near_edges += o.errors_near_edges;
    fg_inter += o.fg_inter;
    fg_union += o.fg_union;
    bg_inter += o.bg_inter;
    bg_union += o.bg_union;
    return *this;
}

StatCounts stat_counts(const BinaryMask& unchecked, const BinaryMask& gt, int radius, EdgeSource source) {
    const QualityMap q = derive_quality_map(gt, unchecked);
    StatCounts c;
    c.classes = count_classes(q);
    const EibCounts eib = eib_counts(q, edges_from(gt, unchecked, source), radius);
    c.errors = eib.errors;
    c.errors_near_edges = eib.near;
    c.fg_inter = c.classes.tp;
    c.fg_union = c.classes.tp + c.classes.fp + c.classes.fn;
    c.bg_inter = c.classes.tn;
    c.bg_union = c.classes.tn + c.classes.fp + c.classes.fn;
    return c;
}

StatsRow stats_row(const std::string& id, const StatCounts& c) {
    StatsRow r;
    r.id = id;
    r.distribution = class_distribution(c.classes);
    if (c.errors == 0) r.eib = {0.0, true};
    else r.eib = {100.0 * static_cast<double>(c.errors_near_edges) / static_cast<double>(c.errors), false};
    const double fg = c.fg_union ? static_cast<double>(c.fg_inter) / c.fg_union : 0.0;
    const double bg = c.bg_union ? static_cast<double>(c.bg_inter) / c.bg_union : 0.0;
    r.miou = 100.0 * (fg + bg) / 2.0;
    return r;
}

StatsReport dataset_stats(const std::vector<SampleTriplet>& samples, int radius, EdgeSource source) {
    std::vector<std::string> missing;
    for (const SampleTriplet& s : samples)
        if (!s.unchecked) missing.push_back(s.id);
    if (!missing.empty()) {
        std::string ids;
        for (const auto& id : missing) ids += (ids.empty() ? "" : ", ") + id;
        throw std::invalid_argument("dataset_stats: samples without an unchecked mask: " + ids);
    }
    StatsReport report;
    report.radius = radius;
    StatCounts total;
    for (const SampleTriplet& s : samples) {
        validate(s);
        const StatCounts c = stat_counts(*s.unchecked, s.gt, radius, source);
        report.samples.push_back(stats_row(s.id, c));
        total += c;
    }
    report.aggregate = stats_row("ALL", total);
    return report;
}

StatsReport dataset_stats(const DatasetManifest& manifest, int radius, EdgeSource source) {
    std::vector<std::string> missing;
    for (const ManifestEntry& e : manifest.entries)
        if (!e.unchecked) missing.push_back(e.id);
    if (!missing.empty()) {
        std::string ids;
        for (const auto& id : missing) ids += (ids.empty() ? "" : ", ") + id;
        throw std::invalid_argument("dataset_stats: entries without an unchecked mask: " + ids);
    }
    return dataset_stats(manifest.load_all(), radius, source);
}

void write_stats_table(std::ostream& os, const StatsReport& report) {
    const auto flags = os.flags();
    const std::string eib = "EIB@" + std::to_string(report.radius);
    os << "id\tTP%\tFP%\tTN%\tFN%\t" << eib << "\tmIoU\n";
    os << std::fixed << std::setprecision(2);
    const auto row = [&](const StatsRow& r) {
        os << r.id << '\t' << r.distribution.pct_tp << '\t' << r.distribution.pct_fp << '\t' << r.distribution.pct_tn
           << '\t' << r.distribution.pct_fn << '\t' << r.eib.value << (r.eib.undefined ? "*" : "") << '\t' << r.miou
           << '\n';
    };
    for (const StatsRow& r : report.samples) row(r);
    row(report.aggregate);
    os.flags(flags);
}

// -- rendering -------------------------------------------------------------------

std::array<std::uint8_t, 3> class_color(QualityClass c) {
    switch (c) {
        case QualityClass::TP: return {255, 0, 0};
        case QualityClass::FP: return {0, 255, 0};
        case QualityClass::TN: return {0, 0, 255};
        case QualityClass::FN: return {0, 255, 255};
    }
    return {0, 0, 0};
}

std::vector<std::array<std::uint8_t, 3>> quality_palette() {
    return {class_color(QualityClass::TN), class_color(QualityClass::TP), class_color(QualityClass::FP),
            class_color(QualityClass::FN)};
}

RgbImage render_quality_map(const QualityMap& q) {
    RgbImage out(q.height(), q.width());
    for (int y = 0; y < q.height(); ++y)
        for (int x = 0; x < q.width(); ++x) out.set_pixel(y, x, class_color(q(y, x)));
    return out;
}

QualityMap decode_rendered(const RgbImage& rgb) {
    QualityMap q(rgb.size());
    for (int y = 0; y < rgb.height(); ++y) {
        for (int x = 0; x < rgb.width(); ++x) {
            const auto px = rgb.pixel(y, x);
            bool found = false;
            for (QualityClass c : kAllClasses) {
                if (class_color(c) == px) {
                    q(y, x) = c;
                    found = true;
                    break;
                }
            }
            if (!found) {
                std::ostringstream msg;
                msg << "decode_rendered: colour (" << int(px[0]) << "," << int(px[1]) << "," << int(px[2])
                    << ") at (" << y << "," << x << ") is not a quality-map colour";
                throw std::invalid_argument(msg.str());
            }
        }
    }
    return q;
}

void write_quality_map(const fs::path& path, const QualityMap& q) {
    std::vector<std::uint8_t> idx(q.area());
    const auto v = q.values();
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<std::uint8_t>(v[i]);
    io::write_paletted_png(path, q.width(), q.height(), idx, quality_palette());
}

QualityMap read_quality_map(const fs::path& path) {
    const io::PngImage png = io::read_png(path);
    if (png.paletted()) {
        QualityMap q(png.height, png.width);
        auto out = q.values();
        for (std::size_t i = 0; i < out.size(); ++i) {
            const std::uint8_t v = png.pixels[i];
            if (v > 3) throw io::IoError("'" + path.string() + "': palette index " + std::to_string(v) + " is not a class");
            out[i] = static_cast<QualityClass>(v);
        }
        return q;
    }
    if (png.channels != 3) throw io::IoError("'" + path.string() + "': expected a paletted or RGB quality map");
    return decode_rendered(io::read_rgb(path));
}

}  // namespace pqm::data
