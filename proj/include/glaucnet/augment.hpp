//=======================================================================
// Copyright (c) 2026 the glaucnet authors
// Distributed under the terms of the MIT License.
// (See accompanying file LICENSE or copy at
//  http://opensource.org/licenses/MIT)
//=======================================================================

#pragma once

#include <string>
#include <vector>

#include "glaucnet/image.hpp"
#include "glaucnet/lbp.hpp"
#include "glaucnet/tensor.hpp"
#include "glaucnet/types.hpp"

namespace glaucnet {

/// One network input: a (3, H, W) tensor plus its provenance.
struct sample {
    tensor_f input;
    class_label label = class_label::normal;
    std::string source_id;
    stream_tag stream = stream_tag::r;
};

namespace detail {

/// Shared preparation path for raw channels and LBP images: resize the
/// gray plane to the network input size, replicate to 3 channels, scale
/// to [0, 1].
inline sample make_sample(const image_u8& plane, class_label label, const std::string& source_id,
                          stream_tag tag, std::size_t input_size) {
    sample s;
    s.input = to_tensor<float>(replicate_to_3ch(resize_bilinear(plane, input_size, input_size)));
    s.label = label;
    s.source_id = source_id;
    s.stream = tag;
    return s;
}

} // namespace detail

/// Expands one training image into 6 samples: the R, G, B channel planes
/// plus the LBP image of each. LBP runs at the original resolution,
/// before the resize to the network input size. Deterministic.
inline std::vector<sample> augment_training_image(const image_u8& img, class_label label,
                                                  std::size_t input_size,
                                                  const std::string& source_id = {}) {
    const auto [r, g, b] = split_channels(img);
    std::vector<sample> out;
    out.reserve(6);
    out.push_back(detail::make_sample(r, label, source_id, stream_tag::r, input_size));
    out.push_back(detail::make_sample(g, label, source_id, stream_tag::g, input_size));
    out.push_back(detail::make_sample(b, label, source_id, stream_tag::b, input_size));
    out.push_back(detail::make_sample(lbp_image(r), label, source_id, stream_tag::lbp_r, input_size));
    out.push_back(detail::make_sample(lbp_image(g), label, source_id, stream_tag::lbp_g, input_size));
    out.push_back(detail::make_sample(lbp_image(b), label, source_id, stream_tag::lbp_b, input_size));
    return out;
}

/// Prepares one test image: the three channel samples only, no LBP.
inline std::vector<sample> prepare_test_image(const image_u8& img, class_label label,
                                              std::size_t input_size,
                                              const std::string& source_id = {}) {
    const auto [r, g, b] = split_channels(img);
    std::vector<sample> out;
    out.reserve(3);
    out.push_back(detail::make_sample(r, label, source_id, stream_tag::r, input_size));
    out.push_back(detail::make_sample(g, label, source_id, stream_tag::g, input_size));
    out.push_back(detail::make_sample(b, label, source_id, stream_tag::b, input_size));
    return out;
}

} // namespace glaucnet
