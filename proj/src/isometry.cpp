#include "pqm/isometry.hpp"

#include <algorithm>
#include <stdexcept>

namespace pqm {

std::string_view transform_name(Transform t) {
    switch (t) {
        case Transform::Identity: return "identity";
        case Transform::Rot90: return "rot90";
        case Transform::Rot180: return "rot180";
        case Transform::Rot270: return "rot270";
        case Transform::FlipH: return "flip_h";
        case Transform::FlipV: return "flip_v";
        case Transform::Transpose: return "transpose";
        case Transform::AntiTranspose: return "anti_transpose";
    }
    return "?";
}

Transform parse_transform(std::string_view name) {
    for (Transform t : kDihedralGroup)
        if (transform_name(t) == name) return t;
    throw std::invalid_argument("unknown transform '" + std::string(name) + "'");
}

bool in_pool(Transform t) {
    return std::find(kPoolTransforms.begin(), kPoolTransforms.end(), t) != kPoolTransforms.end();
}

namespace {

// Linear action on centred (y, x) coordinates: output = M * source.
struct Mat2 {
    int a, b, c, d;
    friend bool operator==(const Mat2&, const Mat2&) = default;
};

Mat2 operator*(const Mat2& l, const Mat2& r) {
    return {l.a * r.a + l.b * r.c, l.a * r.b + l.b * r.d, l.c * r.a + l.d * r.c, l.c * r.b + l.d * r.d};
}

Mat2 matrix_of(Transform t) {
    switch (t) {
        case Transform::Identity: return {1, 0, 0, 1};
        case Transform::Rot90: return {0, 1, -1, 0};
        case Transform::Rot180: return {-1, 0, 0, -1};
        case Transform::Rot270: return {0, -1, 1, 0};
        case Transform::FlipH: return {1, 0, 0, -1};
        case Transform::FlipV: return {-1, 0, 0, 1};
        case Transform::Transpose: return {0, 1, 1, 0};
        case Transform::AntiTranspose: return {0, -1, -1, 0};
    }
    throw std::invalid_argument("unknown transform");
}

Transform from_matrix(const Mat2& m) {
    for (Transform t : kDihedralGroup)
        if (matrix_of(t) == m) return t;
    throw std::logic_error("matrix is not a dihedral group element");
}

}  // namespace

Transform inverse(Transform t) {
    switch (t) {
        case Transform::Rot90: return Transform::Rot270;
        case Transform::Rot270: return Transform::Rot90;
        default: return t;  // involutions
    }
}

Transform compose(Transform first, Transform second) { return from_matrix(matrix_of(second) * matrix_of(first)); }

Size transformed_size(Transform t, Size s) {
    const Mat2 m = matrix_of(t);
    return m.a == 0 ? Size{s.width, s.height} : s;
}

SourceCoord source_coord(Transform t, Size src, int y, int x) {
    const int h = src.height;
    const int w = src.width;
    switch (t) {
        case Transform::Identity: return {y, x};
        case Transform::Rot90: return {h - 1 - x, y};
        case Transform::Rot180: return {h - 1 - y, w - 1 - x};
        case Transform::Rot270: return {x, w - 1 - y};
        case Transform::FlipH: return {y, w - 1 - x};
        case Transform::FlipV: return {h - 1 - y, x};
        case Transform::Transpose: return {x, y};
        case Transform::AntiTranspose: return {h - 1 - x, w - 1 - y};
    }
    throw std::invalid_argument("unknown transform");
}

BinaryMask apply_transform(Transform t, const BinaryMask& in) {
    const Grid<std::uint8_t> g = apply_transform(t, in.grid());
    return BinaryMask::from_bytes(g.height(), g.width(), g.values());
}

EdgeMap apply_transform(Transform t, const EdgeMap& in) { return EdgeMap(apply_transform(t, in.mask())); }

RgbImage apply_transform(Transform t, const RgbImage& in) {
    const Size os = transformed_size(t, in.size());
    RgbImage out(os.height, os.width);
    for (int y = 0; y < os.height; ++y) {
        for (int x = 0; x < os.width; ++x) {
            const SourceCoord s = source_coord(t, in.size(), y, x);
            out.set_pixel(y, x, in.pixel(s.y, s.x));
        }
    }
    return out;
}

}  // namespace pqm
