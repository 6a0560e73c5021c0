//=======================================================================
// Copyright (c) 2026 the glaucnet authors
// Distributed under the terms of the MIT License.
// (See accompanying file LICENSE or copy at
//  http://opensource.org/licenses/MIT)
//=======================================================================

#pragma once

#include <string>
#include <vector>

#include "glaucnet/error.hpp"
#include "glaucnet/types.hpp"

namespace glaucnet {

enum class fusion_rule { majority, mean_probability };

inline const char* to_string(fusion_rule rule) {
    return rule == fusion_rule::majority ? "majority" : "meanprob";
}

inline fusion_rule parse_fusion_rule(const std::string& s) {
    if (s == "majority") return fusion_rule::majority;
    if (s == "meanprob") return fusion_rule::mean_probability;
    throw parse_error("unknown fusion rule '" + s + "' (expected majority or meanprob)");
}

struct fused_decision {
    class_label label = class_label::normal;
    std::vector<double> mean_probabilities;
};

namespace detail {

/// The channel decisions must be exactly one R, one G and one B stream,
/// each with a probability vector of the same positive length.
inline void validate_channel_decisions(const std::vector<decision>& parts) {
    if (parts.size() != 3) {
        throw error("channel fusion needs exactly 3 decisions, got " +
                    std::to_string(parts.size()));
    }
    bool seen[3] = {false, false, false};
    for (const auto& d : parts) {
        const int tag = static_cast<int>(d.stream);
        if (tag < 0 || tag > 2) {
            throw error(std::string("channel fusion accepts only R, G and B streams, got ") +
                        to_string(d.stream));
        }
        if (seen[tag]) {
            throw error(std::string("duplicate ") + to_string(d.stream) +
                        " stream in channel fusion");
        }
        seen[tag] = true;
    }
    const std::size_t dim = parts.front().probabilities.size();
    if (dim == 0) throw error("channel fusion needs non-empty probability vectors");
    for (const auto& d : parts) {
        if (d.probabilities.size() != dim) {
            throw error("channel fusion probability vectors disagree in length");
        }
    }
}

inline std::vector<double> mean_probabilities(const std::vector<decision>& parts) {
    std::vector<double> mean(parts.front().probabilities.size(), 0.0);
    for (const auto& d : parts) {
        for (std::size_t i = 0; i < mean.size(); ++i) {
            mean[i] += d.probabilities[i];
        }
    }
    for (double& v : mean) v /= static_cast<double>(parts.size());
    return mean;
}

} // namespace detail

/// Hard-label majority vote over the R, G and B decisions. A label
/// chosen by at least two channels wins; if all three disagree (possible
/// only with more than two classes) the mean-probability argmax decides.
inline fused_decision fuse_majority(const std::vector<decision>& parts) {
    detail::validate_channel_decisions(parts);
    fused_decision fused;
    fused.mean_probabilities = detail::mean_probabilities(parts);
    for (const auto& d : parts) {
        int votes = 0;
        for (const auto& other : parts) {
            if (other.label == d.label) ++votes;
        }
        if (votes >= 2) {
            fused.label = d.label;
            return fused;
        }
    }
    fused.label = static_cast<class_label>(argmax_low_tie(fused.mean_probabilities));
    return fused;
}

/// Averages the three probability vectors and takes the argmax (lowest
/// index wins ties).
inline fused_decision fuse_mean_probability(const std::vector<decision>& parts) {
    detail::validate_channel_decisions(parts);
    fused_decision fused;
    fused.mean_probabilities = detail::mean_probabilities(parts);
    fused.label = static_cast<class_label>(argmax_low_tie(fused.mean_probabilities));
    return fused;
}

inline fused_decision fuse(const std::vector<decision>& parts, fusion_rule rule) {
    return rule == fusion_rule::majority ? fuse_majority(parts) : fuse_mean_probability(parts);
}

} // namespace glaucnet
