#include "pqm/io/png.hpp"

#include <png.h>

#include <algorithm>
#include <csetjmp>
#include <cstdio>
#include <cstdlib>
#include <memory>
#include <string>

namespace pqm::io {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
    FilePtr f(std::fopen(path.string().c_str(), mode));
    if (!f) throw IoError("cannot open '" + path.string() + "'");
    return f;
}

void png_error_cb(png_structp png, png_const_charp msg) {
    auto* buf = static_cast<std::string*>(png_get_error_ptr(png));
    if (buf) *buf = msg;
    png_longjmp(png, 1);
}
void png_warn_cb(png_structp, png_const_charp) {}

// C-style cores: no objects with destructors may live between setjmp and longjmp.
bool write_png_raw(std::FILE* f, int width, int height, int color_type, int channels, const std::uint8_t* data,
                   const png_color* palette, int palette_size, std::string* err) {
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, err, png_error_cb, png_warn_cb);
    if (!png) return false;
    png_infop info = png_create_info_struct(png);
    if (!info || setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        return false;
    }
    png_init_io(png, f);
    png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8, color_type,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    if (palette) png_set_PLTE(png, info, palette, palette_size);
    png_write_info(png, info);
    const std::size_t stride = static_cast<std::size_t>(width) * channels;
    for (int y = 0; y < height; ++y) png_write_row(png, const_cast<std::uint8_t*>(data + y * stride));
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    return true;
}

struct RawRead {
    int width = 0, height = 0, channels = 0;
    std::size_t stride = 0;
    png_colorp palette = nullptr;
    int palette_size = 0;
};

// Two-phase read so the caller can size its buffer outside the setjmp region.
bool read_png_raw(std::FILE* f, RawRead* meta, std::vector<std::uint8_t>* pixels,
                  std::vector<std::array<std::uint8_t, 3>>* palette, std::string* err) {
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, err, png_error_cb, png_warn_cb);
    if (!png) return false;
    png_infop info = png_create_info_struct(png);
    png_bytep* volatile rows = nullptr;
    if (!info || setjmp(png_jmpbuf(png))) {
        std::free(rows);
        png_destroy_read_struct(&png, &info, nullptr);
        return false;
    }
    png_init_io(png, f);
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);
    const int color_type = png_get_color_type(png, info);
    const int bit_depth = png_get_bit_depth(png, info);
    if (bit_depth == 16) png_set_strip_16(png);
    if (color_type == PNG_COLOR_TYPE_PALETTE) {
        png_get_PLTE(png, info, &meta->palette, &meta->palette_size);
        if (bit_depth < 8) png_set_packing(png);
    } else if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) {
        png_set_expand_gray_1_2_4_to_8(png);
    }
    if (color_type & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    png_read_update_info(png, info);
    meta->width = static_cast<int>(png_get_image_width(png, info));
    meta->height = static_cast<int>(png_get_image_height(png, info));
    meta->channels = png_get_channels(png, info);
    meta->stride = png_get_rowbytes(png, info);
    for (int i = 0; i < meta->palette_size; ++i)
        palette->push_back({meta->palette[i].red, meta->palette[i].green, meta->palette[i].blue});
    pixels->resize(meta->stride * meta->height);
    rows = static_cast<png_bytep*>(std::malloc(sizeof(png_bytep) * meta->height));
    for (int y = 0; y < meta->height; ++y) rows[y] = pixels->data() + y * meta->stride;
    png_read_image(png, rows);
    png_read_end(png, nullptr);
    std::free(rows);
    png_destroy_read_struct(&png, &info, nullptr);
    return true;
}

void write_png(const std::filesystem::path& path, int width, int height, int color_type, int channels,
               const std::uint8_t* data, const std::vector<std::array<std::uint8_t, 3>>* palette) {
    FilePtr f = open_file(path, "wb");
    std::vector<png_color> pal;
    if (palette)
        for (const auto& c : *palette) pal.push_back(png_color{c[0], c[1], c[2]});
    std::string err;
    if (!write_png_raw(f.get(), width, height, color_type, channels, data, palette ? pal.data() : nullptr,
                       static_cast<int>(pal.size()), &err))
        throw IoError("writing '" + path.string() + "' failed: " + err);
}

}  // namespace

PngImage read_png(const std::filesystem::path& path) {
    FilePtr f = open_file(path, "rb");
    std::uint8_t sig[8];
    if (std::fread(sig, 1, 8, f.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0)
        throw IoError("'" + path.string() + "' is not a PNG file");
    PngImage out;
    RawRead meta;
    std::string err;
    if (!read_png_raw(f.get(), &meta, &out.pixels, &out.palette, &err))
        throw IoError("reading '" + path.string() + "' failed: " + err);
    out.width = meta.width;
    out.height = meta.height;
    out.channels = meta.channels;
    // Drop any row padding so pixels are tightly packed.
    const std::size_t tight = static_cast<std::size_t>(out.width) * out.channels;
    if (meta.stride != tight) {
        std::vector<std::uint8_t> packed(tight * out.height);
        for (int y = 0; y < out.height; ++y)
            std::copy_n(out.pixels.begin() + y * meta.stride, tight, packed.begin() + y * tight);
        out.pixels = std::move(packed);
    }
    return out;
}

void write_gray_png(const std::filesystem::path& path, int width, int height, const std::vector<std::uint8_t>& pixels) {
    if (pixels.size() != static_cast<std::size_t>(width) * height) throw IoError("write_gray_png: size mismatch");
    write_png(path, width, height, PNG_COLOR_TYPE_GRAY, 1, pixels.data(), nullptr);
}

void write_rgb_png(const std::filesystem::path& path, const RgbImage& image) {
    write_png(path, image.width(), image.height(), PNG_COLOR_TYPE_RGB, 3, image.bytes().data(), nullptr);
}

void write_paletted_png(const std::filesystem::path& path, int width, int height,
                        const std::vector<std::uint8_t>& indices,
                        const std::vector<std::array<std::uint8_t, 3>>& palette) {
    if (indices.size() != static_cast<std::size_t>(width) * height)
        throw IoError("write_paletted_png: size mismatch");
    write_png(path, width, height, PNG_COLOR_TYPE_PALETTE, 1, indices.data(), &palette);
}

BinaryMask read_mask(const std::filesystem::path& path) {
    const PngImage png = read_png(path);
    BinaryMask m(png.height, png.width);
    for (int y = 0; y < png.height; ++y) {
        for (int x = 0; x < png.width; ++x) {
            const std::size_t base = (static_cast<std::size_t>(y) * png.width + x) * png.channels;
            bool fg = false;
            if (png.paletted()) {
                const std::uint8_t idx = png.pixels[base];
                if (idx >= png.palette.size()) throw IoError("'" + path.string() + "': palette index out of range");
                const auto& c = png.palette[idx];
                fg = c[0] || c[1] || c[2];
            } else {
                for (int c = 0; c < png.channels; ++c) fg = fg || png.pixels[base + c] != 0;
            }
            m.set(y, x, fg);
        }
    }
    return m;
}

void write_mask(const std::filesystem::path& path, const BinaryMask& mask) {
    std::vector<std::uint8_t> px(mask.area());
    const auto v = mask.values();
    for (std::size_t i = 0; i < px.size(); ++i) px[i] = v[i] ? 255 : 0;
    write_gray_png(path, mask.width(), mask.height(), px);
}

RgbImage read_rgb(const std::filesystem::path& path) {
    const PngImage png = read_png(path);
    RgbImage img(png.height, png.width);
    for (int y = 0; y < png.height; ++y) {
        for (int x = 0; x < png.width; ++x) {
            const std::size_t base = (static_cast<std::size_t>(y) * png.width + x) * png.channels;
            if (png.paletted()) {
                const std::uint8_t idx = png.pixels[base];
                if (idx >= png.palette.size()) throw IoError("'" + path.string() + "': palette index out of range");
                img.set_pixel(y, x, png.palette[idx]);
            } else if (png.channels == 1) {
                const std::uint8_t v = png.pixels[base];
                img.set_pixel(y, x, {v, v, v});
            } else {
                img.set_pixel(y, x, {png.pixels[base], png.pixels[base + 1], png.pixels[base + 2]});
            }
        }
    }
    return img;
}

}  // namespace pqm::io
