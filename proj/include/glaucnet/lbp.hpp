//=======================================================================
// Copyright (c) 2026 the glaucnet authors
// Distributed under the terms of the MIT License.
// (See accompanying file LICENSE or copy at
//  http://opensource.org/licenses/MIT)
//=======================================================================

#pragma once

#include <cstdint>

#include "glaucnet/error.hpp"
#include "glaucnet/image.hpp"

namespace glaucnet {

/// Basic 3x3 local binary pattern operator. Fixed parameterization:
///   - 8 neighbors at radius 1 on the pixel grid (no interpolation)
///   - a neighbor >= center sets its bit
///   - p0 is the top-left neighbor, then clockwise; p0 is the MSB
///   - borders are replicate-padded so output size equals input size
struct lbp_config {
    static constexpr int neighbor_count = 8;
    static constexpr int radius = 1;
};

namespace detail {

// Neighbor offsets in bit order: top-left, top, top-right, right,
// bottom-right, bottom, bottom-left, left.
inline constexpr int lbp_dx[8] = {-1, 0, 1, 1, 1, 0, -1, -1};
inline constexpr int lbp_dy[8] = {-1, -1, -1, 0, 1, 1, 1, 0};

inline std::size_t clamp_coord(long v, std::size_t extent) {
    if (v < 0) return 0;
    if (v >= static_cast<long>(extent)) return extent - 1;
    return static_cast<std::size_t>(v);
}

inline void require_lbp_input(const image_u8& gray) {
    if (gray.channels != 1) {
        throw shape_error("lbp: expected 1 channel, got " + std::to_string(gray.channels));
    }
    if (gray.width < 3 || gray.height < 3) {
        throw shape_error("lbp: image must be at least 3x3, got " + std::to_string(gray.width) +
                          "x" + std::to_string(gray.height));
    }
}

} // namespace detail

/// LBP code image of a gray image, same dimensions as the input.
inline image_u8 lbp_image(const image_u8& gray, const lbp_config& = {}) {
    detail::require_lbp_input(gray);
    image_u8 out(gray.width, gray.height, 1);
    for (std::size_t y = 0; y < gray.height; ++y) {
        for (std::size_t x = 0; x < gray.width; ++x) {
            const std::uint8_t center = gray.at(x, y);
            unsigned code = 0;
            for (int i = 0; i < 8; ++i) {
                const std::size_t nx = detail::clamp_coord(static_cast<long>(x) + detail::lbp_dx[i], gray.width);
                const std::size_t ny = detail::clamp_coord(static_cast<long>(y) + detail::lbp_dy[i], gray.height);
                if (gray.at(nx, ny) >= center) {
                    code |= 1u << (7 - i);
                }
            }
            out.at(x, y) = static_cast<std::uint8_t>(code);
        }
    }
    return out;
}

/// Single-pixel LBP code by literal neighbor enumeration. Test oracle;
/// deliberately spelled out neighbor by neighbor instead of sharing the
/// offset-table loop above.
inline unsigned lbp_brute_force(const image_u8& gray, std::size_t x, std::size_t y,
                                const lbp_config& = {}) {
    detail::require_lbp_input(gray);
    if (x >= gray.width || y >= gray.height) {
        throw shape_error("lbp_brute_force: pixel (" + std::to_string(x) + "," + std::to_string(y) +
                          ") outside " + std::to_string(gray.width) + "x" + std::to_string(gray.height));
    }

    const auto sample = [&](long sx, long sy) -> std::uint8_t {
        if (sx < 0) sx = 0;
        if (sy < 0) sy = 0;
        if (sx > static_cast<long>(gray.width) - 1) sx = static_cast<long>(gray.width) - 1;
        if (sy > static_cast<long>(gray.height) - 1) sy = static_cast<long>(gray.height) - 1;
        return gray.at(static_cast<std::size_t>(sx), static_cast<std::size_t>(sy));
    };

    const long cx = static_cast<long>(x);
    const long cy = static_cast<long>(y);
    const std::uint8_t center = gray.at(x, y);

    unsigned code = 0;
    if (sample(cx - 1, cy - 1) >= center) code += 128; // top-left
    if (sample(cx,     cy - 1) >= center) code += 64;  // top
    if (sample(cx + 1, cy - 1) >= center) code += 32;  // top-right
    if (sample(cx + 1, cy    ) >= center) code += 16;  // right
    if (sample(cx + 1, cy + 1) >= center) code += 8;   // bottom-right
    if (sample(cx,     cy + 1) >= center) code += 4;   // bottom
    if (sample(cx - 1, cy + 1) >= center) code += 2;   // bottom-left
    if (sample(cx - 1, cy    ) >= center) code += 1;   // left
    return code;
}

} // namespace glaucnet
