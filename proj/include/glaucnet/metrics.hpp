//=======================================================================
// Copyright (c) 2026 the glaucnet authors
// Distributed under the terms of the MIT License.
// (See accompanying file LICENSE or copy at
//  http://opensource.org/licenses/MIT)
//=======================================================================

#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "glaucnet/error.hpp"
#include "glaucnet/types.hpp"

namespace glaucnet {

/// Binary confusion counts with glaucoma as the positive class.
struct confusion {
    std::size_t tp = 0; // glaucoma predicted glaucoma
    std::size_t fp = 0; // normal predicted glaucoma
    std::size_t tn = 0; // normal predicted normal
    std::size_t fn = 0; // glaucoma predicted normal

    void add(class_label truth, class_label predicted) {
        if (truth == class_label::glaucoma) {
            predicted == class_label::glaucoma ? ++tp : ++fn;
        } else {
            predicted == class_label::glaucoma ? ++fp : ++tn;
        }
    }

    std::size_t total() const { return tp + fp + tn + fn; }
};

/// Percentages in [0, 100].
struct metric_set {
    double accuracy = 0.0;    // (tp+tn)/total
    double sensitivity = 0.0; // tp/(tp+fn)
    double specificity = 0.0; // tn/(tn+fp)
};

inline metric_set compute_metrics(const confusion& c) {
    if (c.tp + c.fn == 0) {
        throw error("metrics need at least one positive (glaucoma) example");
    }
    if (c.tn + c.fp == 0) {
        throw error("metrics need at least one negative (normal) example");
    }
    metric_set m;
    m.accuracy = 100.0 * static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
    m.sensitivity = 100.0 * static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
    m.specificity = 100.0 * static_cast<double>(c.tn) / static_cast<double>(c.tn + c.fp);
    return m;
}

/// Exact maximum, arithmetic mean, and exact minimum over repetitions.
struct metric_summary {
    double max = 0.0;
    double mean = 0.0;
    double min = 0.0;
};

inline metric_summary aggregate_max_mean_min(const std::vector<double>& values) {
    if (values.empty()) throw error("cannot aggregate zero repetitions");
    metric_summary s;
    s.max = *std::max_element(values.begin(), values.end());
    s.min = *std::min_element(values.begin(), values.end());
    double sum = 0.0;
    for (const double v : values) sum += v;
    s.mean = sum / static_cast<double>(values.size());
    return s;
}

} // namespace glaucnet
