//=======================================================================
// Copyright (c) 2026 the glaucnet authors
// Distributed under the terms of the MIT License.
// (See accompanying file LICENSE or copy at
//  http://opensource.org/licenses/MIT)
//=======================================================================

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "glaucnet/error.hpp"
#include "glaucnet/image.hpp"
#include "glaucnet/rng.hpp"
#include "glaucnet/types.hpp"

namespace glaucnet {

// ---------------------------------------------------------------------
// Manifest: a CSV of `path,label` rows. Lines starting with '#' are
// comments; an optional `path,label` header row is skipped. Relative
// image paths are resolved against the manifest's own directory.
// ---------------------------------------------------------------------

struct manifest_entry {
    std::string path; // resolved
    class_label label = class_label::normal;
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) return "";
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

} // namespace detail

inline std::vector<manifest_entry> load_manifest(const std::string& manifest_path) {
    std::ifstream in(manifest_path);
    if (!in) throw io_error("cannot open manifest '" + manifest_path + "'");
    const std::filesystem::path base = std::filesystem::path(manifest_path).parent_path();

    std::vector<manifest_entry> entries;
    std::vector<std::string> raw_paths;
    std::string line;
    std::size_t line_no = 0;
    bool seen_row = false;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string text = detail::trim(line);
        if (text.empty() || text.front() == '#') continue;
        if (!seen_row && text == "path,label") continue; // header row
        const auto comma = text.rfind(',');
        if (comma == std::string::npos) {
            throw parse_error(manifest_path + ":" + std::to_string(line_no) +
                              ": expected 'path,label', got '" + text + "'");
        }
        const std::string raw_path = detail::trim(text.substr(0, comma));
        const std::string label_str = detail::trim(text.substr(comma + 1));
        if (raw_path.empty()) {
            throw parse_error(manifest_path + ":" + std::to_string(line_no) + ": empty image path");
        }
        for (std::size_t i = 0; i < raw_paths.size(); ++i) {
            if (raw_paths[i] == raw_path) {
                throw parse_error(manifest_path + ":" + std::to_string(line_no) +
                                  ": duplicate image path '" + raw_path + "'");
            }
        }
        manifest_entry e;
        try {
            e.label = parse_class_label(label_str);
        } catch (const parse_error& err) {
            throw parse_error(manifest_path + ":" + std::to_string(line_no) + ": " + err.what());
        }
        const std::filesystem::path p(raw_path);
        e.path = p.is_absolute() ? p.string() : (base / p).string();
        raw_paths.push_back(raw_path);
        entries.push_back(std::move(e));
        seen_row = true;
    }
    if (entries.empty()) {
        throw parse_error(manifest_path + ": manifest lists no images");
    }
    return entries;
}

struct dataset_entry {
    image_u8 image;
    class_label label = class_label::normal;
    std::string id; // the resolved image path
};

inline std::vector<dataset_entry> load_dataset(const std::vector<manifest_entry>& entries) {
    std::vector<dataset_entry> data;
    data.reserve(entries.size());
    for (const auto& e : entries) {
        data.push_back({load_pnm(e.path), e.label, e.path});
    }
    return data;
}

// ---------------------------------------------------------------------
// Stratified split: per class, a seeded shuffle assigns the first
// round(count * test_fraction) images to the test set.
// ---------------------------------------------------------------------

struct split_indices {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

inline split_indices stratified_split(const std::vector<class_label>& labels, double test_fraction,
                                      std::uint64_t seed) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
        throw error("test fraction must lie strictly between 0 and 1");
    }
    std::vector<std::vector<std::size_t>> per_class(2);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        per_class[static_cast<std::size_t>(labels[i])].push_back(i);
    }
    rng gen(seed);
    split_indices split;
    for (std::size_t c = 0; c < per_class.size(); ++c) {
        auto& idx = per_class[c];
        const char* cls = to_string(static_cast<class_label>(c));
        if (idx.empty()) {
            throw error(std::string("dataset has no ") + cls + " examples");
        }
        gen.shuffle(idx);
        const auto k = static_cast<std::size_t>(
            std::llround(static_cast<double>(idx.size()) * test_fraction));
        if (k == 0 || k == idx.size()) {
            throw error(std::string("test fraction leaves class ") + cls +
                        " without a train or test share (" + std::to_string(idx.size()) +
                        " examples)");
        }
        split.test.insert(split.test.end(), idx.begin(), idx.begin() + static_cast<long>(k));
        split.train.insert(split.train.end(), idx.begin() + static_cast<long>(k), idx.end());
    }
    return split;
}

// ---------------------------------------------------------------------
// Synthetic dataset generator. Class "normal" images are smooth mixtures
// of low-frequency sinusoids; class "glaucoma" images are pixel-level
// checkerboards. Both classes share the same mean intensity (~128), so
// only local texture separates them.
// ---------------------------------------------------------------------

struct synth_config {
    std::size_t per_class = 30;
    std::size_t width = 64;
    std::size_t height = 64;
    std::uint64_t seed = 0;
    std::string out_dir = "synth";
};

namespace detail {

inline std::uint8_t clamp_intensity(double v) {
    return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

inline image_u8 make_smooth_image(std::size_t width, std::size_t height, rng& gen) {
    const double a1 = gen.uniform(12.0, 24.0);
    const double a2 = gen.uniform(12.0, 24.0);
    const double f1 = static_cast<double>(1 + gen.below(3)); // whole cycles across the image
    const double f2 = static_cast<double>(1 + gen.below(3));
    const double p1 = gen.uniform(0.0, 6.283185307179586);
    const double p2 = gen.uniform(0.0, 6.283185307179586);
    double scale[3];
    for (double& s : scale) s = gen.uniform(0.75, 1.0);

    image_u8 img(width, height, 3);
    for (std::size_t y = 0; y < height; ++y) {
        for (std::size_t x = 0; x < width; ++x) {
            const double dev =
                a1 * std::sin(6.283185307179586 * f1 * static_cast<double>(x) /
                                  static_cast<double>(width) + p1) +
                a2 * std::sin(6.283185307179586 * f2 * static_cast<double>(y) /
                                  static_cast<double>(height) + p2);
            for (std::size_t c = 0; c < 3; ++c) {
                img.at(x, y, c) = clamp_intensity(128.0 + scale[c] * dev + gen.normal(0.0, 1.5));
            }
        }
    }
    return img;
}

inline image_u8 make_checker_image(std::size_t width, std::size_t height, rng& gen) {
    const double amplitude = gen.uniform(30.0, 50.0);
    double scale[3];
    for (double& s : scale) s = gen.uniform(0.75, 1.0);

    image_u8 img(width, height, 3);
    for (std::size_t y = 0; y < height; ++y) {
        for (std::size_t x = 0; x < width; ++x) {
            const double dev = ((x + y) % 2 == 0) ? amplitude : -amplitude;
            for (std::size_t c = 0; c < 3; ++c) {
                img.at(x, y, c) = clamp_intensity(128.0 + scale[c] * dev + gen.normal(0.0, 1.5));
            }
        }
    }
    return img;
}

} // namespace detail

/// Writes `2 * per_class` PPM images plus a manifest.csv into out_dir and
/// returns the manifest path. Fully determined by the seed.
inline std::string generate_synthetic_dataset(const synth_config& cfg) {
    if (cfg.per_class == 0) throw error("synthetic dataset needs at least one image per class");
    if (cfg.width < 3 || cfg.height < 3) {
        throw error("synthetic images must be at least 3x3");
    }
    std::filesystem::create_directories(cfg.out_dir);
    const std::filesystem::path dir(cfg.out_dir);

    std::ostringstream manifest;
    manifest << "# synthetic texture dataset: smooth gradients vs fine checkerboards\n";
    manifest << "path,label\n";

    std::size_t image_index = 0;
    for (std::size_t c = 0; c < 2; ++c) {
        const class_label label = static_cast<class_label>(c);
        for (std::size_t i = 0; i < cfg.per_class; ++i, ++image_index) {
            rng gen(mix_seed(cfg.seed, image_index));
            const image_u8 img = c == 0 ? detail::make_smooth_image(cfg.width, cfg.height, gen)
                                        : detail::make_checker_image(cfg.width, cfg.height, gen);
            char name[64];
            std::snprintf(name, sizeof(name), "%s_%03zu.ppm", to_string(label), i);
            save_pnm(img, (dir / name).string());
            manifest << name << ',' << to_string(label) << '\n';
        }
    }

    const std::string manifest_path = (dir / "manifest.csv").string();
    std::ofstream out(manifest_path, std::ios::binary);
    if (!out) throw io_error("cannot write manifest '" + manifest_path + "'");
    out << manifest.str();
    if (!out) throw io_error("failed writing manifest '" + manifest_path + "'");
    return manifest_path;
}

} // namespace glaucnet
