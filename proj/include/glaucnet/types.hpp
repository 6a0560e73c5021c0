//=======================================================================
// Copyright (c) 2026 the glaucnet authors
// Distributed under the terms of the MIT License.
// (See accompanying file LICENSE or copy at
//  http://opensource.org/licenses/MIT)
//=======================================================================

#pragma once

#include <algorithm>
#include <cctype>
#include <string>
#include <vector>

#include "glaucnet/error.hpp"

namespace glaucnet {

/// Binary diagnosis label. glaucoma is the positive class: sensitivity
/// is the glaucoma detection rate, specificity the normal recognition rate.
enum class class_label : int { normal = 0, glaucoma = 1 };

inline const char* to_string(class_label label) {
    return label == class_label::normal ? "normal" : "glaucoma";
}

/// Parses a label token case-insensitively ("Normal", "GLAUCOMA", ...).
inline class_label parse_class_label(std::string token) {
    std::transform(token.begin(), token.end(), token.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (token == "normal") return class_label::normal;
    if (token == "glaucoma") return class_label::glaucoma;
    throw parse_error("unknown class label '" + token + "' (expected normal|glaucoma)");
}

/// Which view of the source image a sample or decision came from.
/// Training uses all six, testing only the three raw channels.
enum class stream_tag : int { r = 0, g = 1, b = 2, lbp_r = 3, lbp_g = 4, lbp_b = 5 };

inline const char* to_string(stream_tag tag) {
    switch (tag) {
        case stream_tag::r: return "R";
        case stream_tag::g: return "G";
        case stream_tag::b: return "B";
        case stream_tag::lbp_r: return "LBP-R";
        case stream_tag::lbp_g: return "LBP-G";
        default: return "LBP-B";
    }
}

inline bool is_lbp_stream(stream_tag tag) {
    return static_cast<int>(tag) >= 3;
}

/// One classifier output: the argmax label plus the full softmax vector.
/// Ties in the argmax resolve toward the lower class index.
struct decision {
    class_label label = class_label::normal;
    std::vector<double> probabilities;
    stream_tag stream = stream_tag::r;
};

inline std::size_t argmax_low_tie(const std::vector<double>& values) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < values.size(); ++i) {
        if (values[i] > values[best]) {
            best = i;
        }
    }
    return best;
}

} // namespace glaucnet
