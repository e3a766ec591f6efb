#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

#include "pqm/raster.hpp"

namespace pqm {

/// Elements of the square's symmetry group acting on rasters. Rotations are clockwise.
/// Only the first six form the augmentation pool; the two transposes exist because
/// composing an odd rotation with a flip lands on them.
enum class Transform { Identity, Rot90, Rot180, Rot270, FlipH, FlipV, Transpose, AntiTranspose };

inline constexpr std::array<Transform, 6> kPoolTransforms = {Transform::Identity, Transform::Rot90,
                                                             Transform::Rot180,   Transform::Rot270,
                                                             Transform::FlipH,    Transform::FlipV};

inline constexpr std::array<Transform, 8> kDihedralGroup = {
    Transform::Identity, Transform::Rot90, Transform::Rot180,    Transform::Rot270,
    Transform::FlipH,    Transform::FlipV, Transform::Transpose, Transform::AntiTranspose};

bool in_pool(Transform t);

std::string_view transform_name(Transform t);
/// Throws std::invalid_argument on an unknown name.
Transform parse_transform(std::string_view name);

Transform inverse(Transform t);
/// The group element equal to applying `first` and then `second`.
Transform compose(Transform first, Transform second);

/// Output size of `t` applied to a raster of size `s`.
Size transformed_size(Transform t, Size s);

/// Maps output coordinates back to source coordinates.
struct SourceCoord {
    int y;
    int x;
};
SourceCoord source_coord(Transform t, Size src, int y, int x);

template <typename T>
Grid<T> apply_transform(Transform t, const Grid<T>& in) {
    Grid<T> out(transformed_size(t, in.size()));
    for (int y = 0; y < out.height(); ++y) {
        for (int x = 0; x < out.width(); ++x) {
            const SourceCoord s = source_coord(t, in.size(), y, x);
            out(y, x) = in(s.y, s.x);
        }
    }
    return out;
}

BinaryMask apply_transform(Transform t, const BinaryMask& in);
EdgeMap apply_transform(Transform t, const EdgeMap& in);
RgbImage apply_transform(Transform t, const RgbImage& in);

}  // namespace pqm
