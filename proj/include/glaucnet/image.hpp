//=======================================================================
// Copyright (c) 2026 the glaucnet authors
// Distributed under the terms of the MIT License.
// (See accompanying file LICENSE or copy at
//  http://opensource.org/licenses/MIT)
//=======================================================================

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <string>
#include <tuple>
#include <vector>

#include "glaucnet/error.hpp"
#include "glaucnet/tensor.hpp"

namespace glaucnet {

/// 8-bit raster, row-major, channel-interleaved. channels is 1 (gray)
/// or 3 (RGB). The minimum size is 3x3 so that every pixel has a full
/// 3x3 neighborhood under replicate padding.
struct image_u8 {
    std::size_t width = 0;
    std::size_t height = 0;
    std::size_t channels = 0;
    std::vector<std::uint8_t> data;

    image_u8() = default;
    image_u8(std::size_t w, std::size_t h, std::size_t c)
            : width(w), height(h), channels(c), data(w * h * c, 0) {}

    std::uint8_t& at(std::size_t x, std::size_t y, std::size_t c = 0) {
        return data[(y * width + x) * channels + c];
    }
    std::uint8_t at(std::size_t x, std::size_t y, std::size_t c = 0) const {
        return data[(y * width + x) * channels + c];
    }

    bool operator==(const image_u8& other) const = default;
};

inline void validate(const image_u8& img, const char* what) {
    if (img.channels != 1 && img.channels != 3) {
        throw parse_error(std::string(what) + ": channel count must be 1 or 3, got " +
                          std::to_string(img.channels));
    }
    if (img.data.size() != img.width * img.height * img.channels) {
        throw parse_error(std::string(what) + ": data length " + std::to_string(img.data.size()) +
                          " does not match " + std::to_string(img.width) + "x" +
                          std::to_string(img.height) + "x" + std::to_string(img.channels));
    }
}

namespace detail {

/// Cursor over a PNM byte stream; every error message carries the byte offset.
struct pnm_cursor {
    const std::uint8_t* bytes;
    std::size_t size;
    std::size_t pos = 0;

    [[noreturn]] void fail(const std::string& message) const {
        throw parse_error("pnm: " + message + " at byte " + std::to_string(pos));
    }

    bool eof() const { return pos >= size; }

    std::uint8_t peek() const {
        if (eof()) fail("unexpected end of data");
        return bytes[pos];
    }

    static bool is_space(std::uint8_t c) {
        return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\v' || c == '\f';
    }

    /// Skips whitespace and '#' comments (comments run to end of line).
    void skip_header_space() {
        for (;;) {
            while (!eof() && is_space(bytes[pos])) ++pos;
            if (!eof() && bytes[pos] == '#') {
                while (!eof() && bytes[pos] != '\n' && bytes[pos] != '\r') ++pos;
                continue;
            }
            return;
        }
    }

    /// Reads a non-negative ASCII decimal, at most `limit`.
    unsigned read_number(unsigned limit, const char* what) {
        if (eof() || bytes[pos] < '0' || bytes[pos] > '9') {
            fail(std::string("expected ") + what);
        }
        unsigned value = 0;
        while (!eof() && bytes[pos] >= '0' && bytes[pos] <= '9') {
            value = value * 10 + (bytes[pos] - '0');
            if (value > limit) fail(std::string(what) + " exceeds " + std::to_string(limit));
            ++pos;
        }
        return value;
    }
};

} // namespace detail

/// Decodes PGM/PPM images, plain (P2/P3) or raw (P5/P6), maxval 255.
/// Plain and raw variants of the same pixel content decode identically.
inline image_u8 decode_pnm(const std::vector<std::uint8_t>& bytes) {
    detail::pnm_cursor cur{bytes.data(), bytes.size()};

    if (cur.size < 2 || cur.bytes[0] != 'P') cur.fail("bad magic (expected P2, P3, P5 or P6)");
    const char kind = static_cast<char>(cur.bytes[1]);
    if (kind != '2' && kind != '3' && kind != '5' && kind != '6') {
        cur.pos = 1;
        cur.fail("bad magic (expected P2, P3, P5 or P6)");
    }
    cur.pos = 2;
    const bool raw = kind == '5' || kind == '6';
    const std::size_t channels = (kind == '3' || kind == '6') ? 3 : 1;

    cur.skip_header_space();
    const unsigned width = cur.read_number(1u << 20, "width");
    cur.skip_header_space();
    const unsigned height = cur.read_number(1u << 20, "height");
    cur.skip_header_space();
    const unsigned maxval = cur.read_number(1u << 16, "maxval");
    if (maxval != 255) cur.fail("maxval " + std::to_string(maxval) + " unsupported (expected 255)");
    if (width == 0 || height == 0) cur.fail("zero image dimension");

    image_u8 img(width, height, channels);
    const std::size_t samples = img.data.size();

    if (raw) {
        // Exactly one whitespace byte separates the header from the raster.
        if (cur.eof() || !detail::pnm_cursor::is_space(cur.peek())) {
            cur.fail("expected single whitespace before raster");
        }
        ++cur.pos;
        const std::size_t available = cur.size - cur.pos;
        if (available < samples) {
            cur.pos = cur.size;
            cur.fail("truncated raster (need " + std::to_string(samples) + " bytes, have " +
                     std::to_string(available) + ")");
        }
        std::copy(cur.bytes + cur.pos, cur.bytes + cur.pos + samples, img.data.begin());
    } else {
        for (std::size_t i = 0; i < samples; ++i) {
            while (!cur.eof() && detail::pnm_cursor::is_space(cur.peek())) ++cur.pos;
            if (cur.eof()) cur.fail("truncated raster (sample " + std::to_string(i) + " missing)");
            img.data[i] = static_cast<std::uint8_t>(cur.read_number(255, "sample"));
        }
    }
    return img;
}

/// Encodes as raw PGM (P5) for 1 channel or raw PPM (P6) for 3 channels.
/// decode_pnm(encode_pnm(x)) == x bit-exactly.
inline std::vector<std::uint8_t> encode_pnm(const image_u8& img) {
    validate(img, "encode_pnm");
    const std::string header = std::string(img.channels == 1 ? "P5" : "P6") + "\n" +
                               std::to_string(img.width) + " " + std::to_string(img.height) +
                               "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.insert(out.end(), img.data.begin(), img.data.end());
    return out;
}

inline image_u8 load_pnm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open image file: " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    try {
        return decode_pnm(bytes);
    } catch (const parse_error& e) {
        throw parse_error(path + ": " + e.what());
    }
}

inline void save_pnm(const image_u8& img, const std::string& path) {
    const auto bytes = encode_pnm(img);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot write image file: " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw io_error("short write to image file: " + path);
}

/// Splits an RGB image into its three single-channel planes.
inline std::tuple<image_u8, image_u8, image_u8> split_channels(const image_u8& img) {
    if (img.channels != 3) {
        throw shape_error("split_channels: expected 3 channels, got " + std::to_string(img.channels));
    }
    image_u8 r(img.width, img.height, 1);
    image_u8 g(img.width, img.height, 1);
    image_u8 b(img.width, img.height, 1);
    const std::size_t pixels = img.width * img.height;
    for (std::size_t i = 0; i < pixels; ++i) {
        r.data[i] = img.data[3 * i + 0];
        g.data[i] = img.data[3 * i + 1];
        b.data[i] = img.data[3 * i + 2];
    }
    return {r, g, b};
}

/// Interleaves three planes back into one RGB image (inverse of split_channels).
inline image_u8 merge_channels(const image_u8& r, const image_u8& g, const image_u8& b) {
    if (r.channels != 1 || g.channels != 1 || b.channels != 1 ||
        r.width != g.width || r.width != b.width || r.height != g.height || r.height != b.height) {
        throw shape_error("merge_channels: planes must be 1-channel and same size");
    }
    image_u8 out(r.width, r.height, 3);
    const std::size_t pixels = r.width * r.height;
    for (std::size_t i = 0; i < pixels; ++i) {
        out.data[3 * i + 0] = r.data[i];
        out.data[3 * i + 1] = g.data[i];
        out.data[3 * i + 2] = b.data[i];
    }
    return out;
}

/// Bilinear resize with half-pixel-center mapping:
///   src = (dst + 0.5) * (src_extent / dst_extent) - 0.5
/// Neighbor coordinates are clamped at the borders; outputs are rounded
/// to nearest (half away from zero) and clamped to [0, 255].
inline image_u8 resize_bilinear(const image_u8& img, std::size_t out_w, std::size_t out_h) {
    validate(img, "resize_bilinear");
    if (out_w == 0 || out_h == 0) {
        throw shape_error("resize_bilinear: output dimensions must be >= 1");
    }
    if (out_w == img.width && out_h == img.height) {
        return img;
    }

    image_u8 out(out_w, out_h, img.channels);
    const double sx = static_cast<double>(img.width) / static_cast<double>(out_w);
    const double sy = static_cast<double>(img.height) / static_cast<double>(out_h);

    const auto clamp_idx = [](long v, std::size_t hi) {
        if (v < 0) return std::size_t(0);
        if (v >= static_cast<long>(hi)) return hi - 1;
        return static_cast<std::size_t>(v);
    };

    for (std::size_t oy = 0; oy < out_h; ++oy) {
        const double src_y = (static_cast<double>(oy) + 0.5) * sy - 0.5;
        const long y0 = static_cast<long>(std::floor(src_y));
        const double fy = src_y - static_cast<double>(y0);
        const std::size_t ya = clamp_idx(y0, img.height);
        const std::size_t yb = clamp_idx(y0 + 1, img.height);
        for (std::size_t ox = 0; ox < out_w; ++ox) {
            const double src_x = (static_cast<double>(ox) + 0.5) * sx - 0.5;
            const long x0 = static_cast<long>(std::floor(src_x));
            const double fx = src_x - static_cast<double>(x0);
            const std::size_t xa = clamp_idx(x0, img.width);
            const std::size_t xb = clamp_idx(x0 + 1, img.width);
            for (std::size_t c = 0; c < img.channels; ++c) {
                const double top = (1.0 - fx) * img.at(xa, ya, c) + fx * img.at(xb, ya, c);
                const double bot = (1.0 - fx) * img.at(xa, yb, c) + fx * img.at(xb, yb, c);
                const double v = (1.0 - fy) * top + fy * bot;
                const long rounded = std::lround(v);
                out.at(ox, oy, c) = static_cast<std::uint8_t>(rounded < 0 ? 0 : (rounded > 255 ? 255 : rounded));
            }
        }
    }
    return out;
}

/// Copies a gray plane into all three channels. The network input is
/// always 3-channel; single channels and LBP images pass through here.
inline image_u8 replicate_to_3ch(const image_u8& gray) {
    if (gray.channels != 1) {
        throw shape_error("replicate_to_3ch: expected 1 channel, got " + std::to_string(gray.channels));
    }
    image_u8 out(gray.width, gray.height, 3);
    const std::size_t pixels = gray.width * gray.height;
    for (std::size_t i = 0; i < pixels; ++i) {
        out.data[3 * i + 0] = gray.data[i];
        out.data[3 * i + 1] = gray.data[i];
        out.data[3 * i + 2] = gray.data[i];
    }
    return out;
}

/// Converts to a (channels, height, width) tensor with values in [0, 1]
/// (intensity / 255).
template <typename T = float>
tensor<T> to_tensor(const image_u8& img) {
    validate(img, "to_tensor");
    tensor<T> out({img.channels, img.height, img.width});
    for (std::size_t c = 0; c < img.channels; ++c) {
        for (std::size_t y = 0; y < img.height; ++y) {
            for (std::size_t x = 0; x < img.width; ++x) {
                out.at(c, y, x) = static_cast<T>(img.at(x, y, c)) / static_cast<T>(255);
            }
        }
    }
    return out;
}

} // namespace glaucnet
