//=======================================================================
// Copyright (c) 2026 the glaucnet authors
// Distributed under the terms of the MIT License.
// (See accompanying file LICENSE or copy at
//  http://opensource.org/licenses/MIT)
//=======================================================================

#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <sstream>
#include <string>
#include <vector>

#include "glaucnet/error.hpp"
#include "glaucnet/layers.hpp"
#include "glaucnet/rng.hpp"
#include "glaucnet/tensor.hpp"

namespace glaucnet {

enum class layer_kind { input, conv, relu, lrn, maxpool, fc, dropout, softmax, output };

inline std::string to_string(layer_kind k) {
    switch (k) {
    case layer_kind::input: return "input";
    case layer_kind::conv: return "conv";
    case layer_kind::relu: return "relu";
    case layer_kind::lrn: return "lrn";
    case layer_kind::maxpool: return "maxpool";
    case layer_kind::fc: return "fc";
    case layer_kind::dropout: return "dropout";
    case layer_kind::softmax: return "softmax";
    case layer_kind::output: return "output";
    }
    return "?";
}

inline layer_kind parse_layer_kind(const std::string& s) {
    if (s == "input") return layer_kind::input;
    if (s == "conv") return layer_kind::conv;
    if (s == "relu") return layer_kind::relu;
    if (s == "lrn") return layer_kind::lrn;
    if (s == "maxpool") return layer_kind::maxpool;
    if (s == "fc") return layer_kind::fc;
    if (s == "dropout") return layer_kind::dropout;
    if (s == "softmax") return layer_kind::softmax;
    if (s == "output") return layer_kind::output;
    throw parse_error("unknown layer kind '" + s + "'");
}

struct layer_spec {
    std::string label;
    layer_kind kind = layer_kind::relu;
    std::size_t filters = 0;  // conv
    std::size_t kernel = 0;   // conv kernel / maxpool window
    std::size_t stride = 1;   // conv, maxpool
    std::size_t pad = 0;      // conv, maxpool
    std::size_t groups = 1;   // conv
    std::size_t units = 0;    // fc
    double rate = 0.5;        // dropout
    lrn_params lrn{};         // lrn

    bool has_weights() const { return kind == layer_kind::conv || kind == layer_kind::fc; }
};

struct model_config {
    std::size_t input_channels = 3;
    std::size_t input_size = 227;
    std::size_t class_count = 2;
    std::vector<layer_spec> layers;
};

/// Label that always resolves to the last fully connected layer, whatever
/// the architecture calls it.
inline constexpr const char* final_fc_alias = "fc-final";

// ---------------------------------------------------------------------
// Built-in architectures
// ---------------------------------------------------------------------

inline model_config make_tiny_config(std::size_t class_count = 2) {
    model_config cfg;
    cfg.input_channels = 3;
    cfg.input_size = 32;
    cfg.class_count = class_count;
    auto add = [&](layer_spec s) { cfg.layers.push_back(std::move(s)); };
    add({.label = "input", .kind = layer_kind::input});
    add({.label = "conv1", .kind = layer_kind::conv, .filters = 8, .kernel = 5, .stride = 1, .pad = 2, .groups = 1});
    add({.label = "relu1", .kind = layer_kind::relu});
    add({.label = "pool1", .kind = layer_kind::maxpool, .kernel = 2, .stride = 2, .pad = 0});
    add({.label = "conv2", .kind = layer_kind::conv, .filters = 16, .kernel = 3, .stride = 1, .pad = 1, .groups = 1});
    add({.label = "relu2", .kind = layer_kind::relu});
    add({.label = "pool2", .kind = layer_kind::maxpool, .kernel = 2, .stride = 2, .pad = 0});
    add({.label = "fc1", .kind = layer_kind::fc, .units = 32});
    add({.label = "relu3", .kind = layer_kind::relu});
    add({.label = "drop1", .kind = layer_kind::dropout, .rate = 0.5});
    add({.label = "fc2", .kind = layer_kind::fc, .units = class_count});
    add({.label = "prob", .kind = layer_kind::softmax});
    add({.label = "output", .kind = layer_kind::output});
    return cfg;
}

inline model_config make_alexnet_config(std::size_t class_count = 2) {
    model_config cfg;
    cfg.input_channels = 3;
    cfg.input_size = 227;
    cfg.class_count = class_count;
    auto add = [&](layer_spec s) { cfg.layers.push_back(std::move(s)); };
    add({.label = "input", .kind = layer_kind::input});
    add({.label = "conv1", .kind = layer_kind::conv, .filters = 96, .kernel = 11, .stride = 4, .pad = 0, .groups = 1});
    add({.label = "relu1", .kind = layer_kind::relu});
    add({.label = "norm1", .kind = layer_kind::lrn});
    add({.label = "pool1", .kind = layer_kind::maxpool, .kernel = 3, .stride = 2, .pad = 0});
    add({.label = "conv2", .kind = layer_kind::conv, .filters = 256, .kernel = 5, .stride = 1, .pad = 2, .groups = 2});
    add({.label = "relu2", .kind = layer_kind::relu});
    add({.label = "norm2", .kind = layer_kind::lrn});
    add({.label = "pool2", .kind = layer_kind::maxpool, .kernel = 3, .stride = 2, .pad = 0});
    add({.label = "conv3", .kind = layer_kind::conv, .filters = 384, .kernel = 3, .stride = 1, .pad = 1, .groups = 1});
    add({.label = "relu3", .kind = layer_kind::relu});
    add({.label = "conv4", .kind = layer_kind::conv, .filters = 384, .kernel = 3, .stride = 1, .pad = 1, .groups = 2});
    add({.label = "relu4", .kind = layer_kind::relu});
    add({.label = "conv5", .kind = layer_kind::conv, .filters = 256, .kernel = 3, .stride = 1, .pad = 1, .groups = 2});
    add({.label = "relu5", .kind = layer_kind::relu});
    add({.label = "pool5", .kind = layer_kind::maxpool, .kernel = 3, .stride = 2, .pad = 0});
    add({.label = "fc6", .kind = layer_kind::fc, .units = 4096});
    add({.label = "relu6", .kind = layer_kind::relu});
    add({.label = "drop6", .kind = layer_kind::dropout, .rate = 0.5});
    add({.label = "fc7", .kind = layer_kind::fc, .units = 4096});
    add({.label = "relu7", .kind = layer_kind::relu});
    add({.label = "drop7", .kind = layer_kind::dropout, .rate = 0.5});
    add({.label = "fc8", .kind = layer_kind::fc, .units = class_count});
    add({.label = "prob", .kind = layer_kind::softmax});
    add({.label = "output", .kind = layer_kind::output});
    return cfg;
}

// ---------------------------------------------------------------------
// Architecture text format: one layer per line, `label kind key=value...`,
// '#' starts a comment. The first line must declare the input, the last
// two a softmax followed by an output.
// ---------------------------------------------------------------------

namespace detail {

inline std::size_t parse_size_value(const std::string& v, const std::string& key,
                                    std::size_t line_no) {
    try {
        std::size_t pos = 0;
        const long long n = std::stoll(v, &pos);
        if (pos != v.size() || n < 0) throw std::invalid_argument(v);
        return static_cast<std::size_t>(n);
    } catch (const std::exception&) {
        throw parse_error("line " + std::to_string(line_no) + ": value for '" + key +
                          "' is not a non-negative integer: '" + v + "'");
    }
}

inline double parse_double_value(const std::string& v, const std::string& key,
                                 std::size_t line_no) {
    try {
        std::size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw parse_error("line " + std::to_string(line_no) + ": value for '" + key +
                          "' is not a number: '" + v + "'");
    }
}

} // namespace detail

inline model_config parse_model_config(std::istream& in) {
    model_config cfg;
    cfg.layers.clear();
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        std::string label, kind_str;
        if (!(ls >> label)) continue; // blank line
        if (!(ls >> kind_str)) {
            throw parse_error("line " + std::to_string(line_no) + ": layer '" + label +
                              "' is missing its kind");
        }
        layer_spec spec;
        spec.label = label;
        try {
            spec.kind = parse_layer_kind(kind_str);
        } catch (const parse_error& e) {
            throw parse_error("line " + std::to_string(line_no) + ": " + e.what());
        }
        std::string kv;
        while (ls >> kv) {
            const auto eq = kv.find('=');
            if (eq == std::string::npos) {
                throw parse_error("line " + std::to_string(line_no) + ": expected key=value, got '" +
                                  kv + "'");
            }
            const std::string key = kv.substr(0, eq);
            const std::string val = kv.substr(eq + 1);
            if (key == "channels" && spec.kind == layer_kind::input) {
                cfg.input_channels = detail::parse_size_value(val, key, line_no);
            } else if (key == "size" && spec.kind == layer_kind::input) {
                cfg.input_size = detail::parse_size_value(val, key, line_no);
            } else if (key == "filters") {
                spec.filters = detail::parse_size_value(val, key, line_no);
            } else if (key == "kernel" || key == "window") {
                spec.kernel = detail::parse_size_value(val, key, line_no);
            } else if (key == "stride") {
                spec.stride = detail::parse_size_value(val, key, line_no);
            } else if (key == "pad") {
                spec.pad = detail::parse_size_value(val, key, line_no);
            } else if (key == "groups") {
                spec.groups = detail::parse_size_value(val, key, line_no);
            } else if (key == "units") {
                spec.units = detail::parse_size_value(val, key, line_no);
            } else if (key == "rate") {
                spec.rate = detail::parse_double_value(val, key, line_no);
            } else if (key == "depth") {
                spec.lrn.depth = detail::parse_size_value(val, key, line_no);
            } else if (key == "k") {
                spec.lrn.k = detail::parse_double_value(val, key, line_no);
            } else if (key == "alpha") {
                spec.lrn.alpha = detail::parse_double_value(val, key, line_no);
            } else if (key == "beta") {
                spec.lrn.beta = detail::parse_double_value(val, key, line_no);
            } else {
                throw parse_error("line " + std::to_string(line_no) + ": unknown key '" + key +
                                  "' for layer kind '" + kind_str + "'");
            }
        }
        cfg.layers.push_back(std::move(spec));
    }
    // class count follows from the last fully connected layer
    for (auto it = cfg.layers.rbegin(); it != cfg.layers.rend(); ++it) {
        if (it->kind == layer_kind::fc) {
            cfg.class_count = it->units;
            break;
        }
    }
    return cfg;
}

inline model_config parse_model_config(const std::string& text) {
    std::istringstream in(text);
    return parse_model_config(in);
}

inline model_config load_model_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open architecture file '" + path + "'");
    try {
        return parse_model_config(in);
    } catch (const parse_error& e) {
        throw parse_error(path + ": " + e.what());
    }
}

inline std::string serialize_model_config(const model_config& cfg) {
    std::ostringstream out;
    for (const auto& s : cfg.layers) {
        out << s.label << ' ' << to_string(s.kind);
        switch (s.kind) {
        case layer_kind::input:
            out << " channels=" << cfg.input_channels << " size=" << cfg.input_size;
            break;
        case layer_kind::conv:
            out << " filters=" << s.filters << " kernel=" << s.kernel << " stride=" << s.stride
                << " pad=" << s.pad << " groups=" << s.groups;
            break;
        case layer_kind::maxpool:
            out << " window=" << s.kernel << " stride=" << s.stride << " pad=" << s.pad;
            break;
        case layer_kind::fc:
            out << " units=" << s.units;
            break;
        case layer_kind::dropout:
            out << " rate=" << s.rate;
            break;
        case layer_kind::lrn:
            out << " depth=" << s.lrn.depth << " k=" << s.lrn.k << " alpha=" << s.lrn.alpha
                << " beta=" << s.lrn.beta;
            break;
        default:
            break;
        }
        out << '\n';
    }
    return out.str();
}

// ---------------------------------------------------------------------
// Network
// ---------------------------------------------------------------------

template <typename T>
struct param_grads {
    std::vector<tensor<T>> weights; // empty tensor where the layer has no parameters
    std::vector<tensor<T>> bias;
};

template <typename T>
struct forward_pass {
    std::vector<tensor<T>> outs;                   // outs[i] = output of layer i
    std::vector<std::vector<std::size_t>> argmax;  // maxpool caches
    std::vector<tensor<T>> masks;                  // dropout caches
};

template <typename T>
class network {
public:
    struct layer_state {
        layer_spec spec;
        tensor<T> weights; // conv: (F, C/groups, K, K); fc: (units, in)
        tensor<T> bias;    // (F) / (units)
        bool trainable = true;
        std::vector<std::size_t> in_shape;
        std::vector<std::size_t> out_shape;
    };

    network(model_config cfg, std::uint64_t seed) : cfg_(std::move(cfg)) {
        validate_structure();
        build_shapes();
        initialize_parameters(seed);
    }

    const model_config& config() const { return cfg_; }
    std::size_t layer_count() const { return layers_.size(); }
    const layer_state& layer(std::size_t i) const { return layers_.at(i); }
    layer_state& layer(std::size_t i) { return layers_.at(i); }

    const std::vector<std::size_t>& input_shape() const { return layers_.front().out_shape; }
    const std::vector<std::size_t>& output_shape() const { return layers_.back().out_shape; }

    /// Index of the layer with this label. The reserved alias "fc-final"
    /// resolves to the last fully connected layer.
    std::size_t find_layer(const std::string& label) const {
        if (label == final_fc_alias) return final_fc_index();
        for (std::size_t i = 0; i < layers_.size(); ++i) {
            if (layers_[i].spec.label == label) return i;
        }
        throw error("no layer labeled '" + label + "'");
    }

    std::size_t final_fc_index() const {
        for (std::size_t i = layers_.size(); i-- > 0;) {
            if (layers_[i].spec.kind == layer_kind::fc) return i;
        }
        throw error("network has no fully connected layer");
    }

    /// Evaluation-mode forward pass to class probabilities.
    tensor<T> predict(const tensor<T>& input) const {
        return run_to(input, layers_.size() - 1, false, nullptr, nullptr);
    }

    /// Evaluation-mode activations after the named layer.
    tensor<T> extract_activations(const tensor<T>& input, const std::string& label) const {
        return run_to(input, find_layer(label), false, nullptr, nullptr);
    }

    /// Forward pass that keeps per-layer outputs for backpropagation.
    /// In training mode dropout consumes `gen`.
    forward_pass<T> forward(const tensor<T>& input, bool training, rng& gen) const {
        forward_pass<T> fwd;
        fwd.outs.resize(layers_.size());
        fwd.argmax.resize(layers_.size());
        fwd.masks.resize(layers_.size());
        run_to(input, layers_.size() - 1, training, &gen, &fwd);
        return fwd;
    }

    /// Cross-entropy loss at `label`, with gradients for every parameter
    /// accumulated into `grads` (which must come from make_grad_buffers).
    double backward(const forward_pass<T>& fwd, std::size_t label, param_grads<T>& grads) const {
        const std::size_t softmax_idx = layers_.size() - 2;
        const tensor<T>& probs = fwd.outs[softmax_idx];
        const double loss = cross_entropy(probs, label);
        tensor<T> g = cross_entropy_logit_grad(probs, label);
        for (std::size_t i = softmax_idx; i-- > 1;) {
            const layer_state& st = layers_[i];
            const tensor<T>& in = fwd.outs[i - 1];
            switch (st.spec.kind) {
            case layer_kind::conv: {
                auto cg = conv_backward(g, in, st.weights, st.spec.stride, st.spec.pad,
                                        st.spec.groups);
                grads.weights[i] += cg.weights;
                grads.bias[i] += cg.bias;
                g = std::move(cg.input);
                break;
            }
            case layer_kind::fc: {
                auto fg = fc_backward(g, in, st.weights);
                grads.weights[i] += fg.weights;
                grads.bias[i] += fg.bias;
                g = std::move(fg.input);
                break;
            }
            case layer_kind::relu:
                g = relu_backward(g, in);
                break;
            case layer_kind::lrn:
                g = lrn_backward(g, in, st.spec.lrn);
                break;
            case layer_kind::maxpool:
                g = maxpool_backward(g, fwd.argmax[i], in.shape());
                break;
            case layer_kind::dropout:
                g = dropout_backward(g, fwd.masks[i]);
                break;
            default:
                throw error("unexpected layer kind in backward pass");
            }
        }
        return loss;
    }

    param_grads<T> make_grad_buffers() const {
        param_grads<T> g;
        g.weights.resize(layers_.size());
        g.bias.resize(layers_.size());
        for (std::size_t i = 0; i < layers_.size(); ++i) {
            if (layers_[i].spec.has_weights()) {
                g.weights[i] = tensor<T>(layers_[i].weights.shape());
                g.bias[i] = tensor<T>(layers_[i].bias.shape());
            }
        }
        return g;
    }

    /// Replace the final fully connected layer with a freshly initialized
    /// one of `class_count` outputs, then freeze every layer strictly
    /// before `freeze_before` (resolved like find_layer; empty string
    /// freezes nothing, i.e. fine-tune everything).
    void transfer_modify(std::size_t class_count, const std::string& freeze_before,
                         std::uint64_t seed) {
        if (class_count < 2) {
            throw error("transfer_modify: class count must be at least 2");
        }
        const std::size_t fc_idx = final_fc_index();
        layer_state& fc = layers_[fc_idx];
        const std::size_t in_dim = fc.weights.extent(1);
        fc.spec.units = class_count;
        fc.weights = tensor<T>({class_count, in_dim});
        fc.bias = tensor<T>({class_count});
        init_he(fc.weights, in_dim, mix_seed(seed, fc_idx));
        fc.bias.fill(T(0));
        cfg_.class_count = class_count;
        cfg_.layers[fc_idx].units = class_count;
        for (auto& st : layers_) st.trainable = true;
        if (!freeze_before.empty()) {
            const std::size_t boundary = find_layer(freeze_before);
            for (std::size_t i = 0; i < boundary; ++i) layers_[i].trainable = false;
        }
        build_shapes(); // re-derive downstream shapes for the new class count
    }

    // -----------------------------------------------------------------
    // Persistence: "GLCW" magic, version, then per weighted layer the
    // label, the weight tensor, and the bias tensor (32-bit floats,
    // little-endian).
    // -----------------------------------------------------------------

    void save_weights(const std::string& path) const {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw io_error("cannot open '" + path + "' for writing");
        out.write("GLCW", 4);
        write_u32(out, 1); // format version
        std::uint32_t count = 0;
        for (const auto& st : layers_) count += st.spec.has_weights() ? 1 : 0;
        write_u32(out, count);
        for (const auto& st : layers_) {
            if (!st.spec.has_weights()) continue;
            write_u16(out, static_cast<std::uint16_t>(st.spec.label.size()));
            out.write(st.spec.label.data(), static_cast<std::streamsize>(st.spec.label.size()));
            out.put(static_cast<char>(2)); // tensor count
            write_tensor(out, st.weights);
            write_tensor(out, st.bias);
        }
        if (!out) throw io_error("failed writing weights to '" + path + "'");
    }

    /// Strict load: every stored layer must match a weighted layer of the
    /// same label and shape, in network order. The network is only
    /// modified once the whole file has validated.
    void load_weights(const std::string& path) {
        auto staged = stage_weights(path);
        std::size_t pos = 0;
        for (const auto& st : layers_) {
            if (!st.spec.has_weights()) continue;
            if (pos >= staged.size()) {
                throw io_error(path + ": missing weights for layer '" + st.spec.label + "'");
            }
            const auto& rec = staged[pos++];
            if (rec.label != st.spec.label) {
                throw io_error(path + ": expected layer '" + st.spec.label + "', found '" +
                               rec.label + "'");
            }
            if (rec.weights.shape() != st.weights.shape() || rec.bias.shape() != st.bias.shape()) {
                throw io_error(path + ": shape mismatch for layer '" + st.spec.label +
                               "' (stored " + shape_to_string(rec.weights.shape()) + ", expected " +
                               shape_to_string(st.weights.shape()) + ")");
            }
        }
        if (pos != staged.size()) {
            throw io_error(path + ": file contains " + std::to_string(staged.size()) +
                           " weighted layers, network has " + std::to_string(pos));
        }
        commit_staged(staged, false);
    }

    struct compat_load_report {
        std::vector<std::string> loaded;
        std::vector<std::string> skipped;
    };

    /// Lenient load for transfer: layers whose label and shape match are
    /// loaded, everything else (typically a re-dimensioned final layer)
    /// keeps its current values.
    compat_load_report load_weights_compatible(const std::string& path) {
        auto staged = stage_weights(path);
        return commit_staged(staged, true);
    }

private:
    struct staged_layer {
        std::string label;
        tensor<T> weights;
        tensor<T> bias;
    };

    model_config cfg_;
    std::vector<layer_state> layers_;

    void validate_structure() const {
        const auto& ls = cfg_.layers;
        if (ls.size() < 4) {
            throw error("architecture needs at least input, fc, softmax and output layers");
        }
        if (ls.front().kind != layer_kind::input) {
            throw error("first layer must be the input, got '" + ls.front().label + "'");
        }
        if (ls.back().kind != layer_kind::output) {
            throw error("last layer must be the output, got '" + ls.back().label + "'");
        }
        if (ls[ls.size() - 2].kind != layer_kind::softmax) {
            throw error("layer before the output must be a softmax, got '" +
                        ls[ls.size() - 2].label + "'");
        }
        bool has_fc = false;
        for (std::size_t i = 0; i < ls.size(); ++i) {
            const auto& s = ls[i];
            if (s.label.empty()) throw error("layer " + std::to_string(i) + " has an empty label");
            if (s.label == final_fc_alias) {
                throw error("label '" + std::string(final_fc_alias) + "' is reserved");
            }
            for (std::size_t j = i + 1; j < ls.size(); ++j) {
                if (ls[j].label == s.label) {
                    throw error("duplicate layer label '" + s.label + "'");
                }
            }
            if (i > 0 && s.kind == layer_kind::input) {
                throw error("layer '" + s.label + "': only the first layer may be the input");
            }
            if (s.kind == layer_kind::conv) {
                if (s.filters == 0 || s.kernel == 0 || s.stride == 0) {
                    throw error("layer '" + s.label + "': conv needs filters, kernel and stride");
                }
                if (s.groups == 0 || s.filters % s.groups != 0) {
                    throw error("layer '" + s.label + "': filters must divide into groups");
                }
            }
            if (s.kind == layer_kind::maxpool && (s.kernel == 0 || s.stride == 0)) {
                throw error("layer '" + s.label + "': maxpool needs window and stride");
            }
            if (s.kind == layer_kind::fc) {
                if (s.units == 0) throw error("layer '" + s.label + "': fc needs units");
                has_fc = true;
            }
            if (s.kind == layer_kind::dropout && (s.rate < 0.0 || s.rate >= 1.0)) {
                throw error("layer '" + s.label + "': dropout rate must be in [0, 1)");
            }
            if (s.kind == layer_kind::lrn && s.lrn.depth == 0) {
                throw error("layer '" + s.label + "': lrn depth must be positive");
            }
        }
        if (!has_fc) throw error("architecture needs at least one fully connected layer");
        for (std::size_t i = ls.size(); i-- > 0;) {
            if (ls[i].kind == layer_kind::fc) {
                if (ls[i].units != cfg_.class_count) {
                    throw error("final fully connected layer '" + ls[i].label + "' has " +
                                std::to_string(ls[i].units) + " units but the model classifies " +
                                std::to_string(cfg_.class_count) + " classes");
                }
                break;
            }
        }
        if (cfg_.input_channels == 0 || cfg_.input_size == 0) {
            throw error("input layer needs positive channels and size");
        }
    }

    /// Walks the layer list deriving every activation shape; allocates
    /// parameter tensors (without initializing values) as a side effect.
    void build_shapes() {
        const bool rebuilding = !layers_.empty();
        if (!rebuilding) {
            layers_.resize(cfg_.layers.size());
            for (std::size_t i = 0; i < cfg_.layers.size(); ++i) {
                layers_[i].spec = cfg_.layers[i];
            }
        }
        std::vector<std::size_t> shape = {cfg_.input_channels, cfg_.input_size, cfg_.input_size};
        for (std::size_t i = 0; i < layers_.size(); ++i) {
            layer_state& st = layers_[i];
            const layer_spec& s = st.spec;
            st.in_shape = shape;
            switch (s.kind) {
            case layer_kind::input:
                break;
            case layer_kind::conv: {
                if (shape.size() != 3) {
                    throw shape_error("layer '" + s.label + "': conv needs (C,H,W) input, got " +
                                      shape_to_string(shape));
                }
                const std::size_t C = shape[0];
                if (C % s.groups != 0) {
                    throw shape_error("layer '" + s.label + "': " + std::to_string(C) +
                                      " channels not divisible by " + std::to_string(s.groups) +
                                      " groups");
                }
                const std::size_t oh = window_extent(shape[1], s.kernel, s.stride, s.pad,
                                                     s.label.c_str());
                const std::size_t ow = window_extent(shape[2], s.kernel, s.stride, s.pad,
                                                     s.label.c_str());
                const std::vector<std::size_t> wshape = {s.filters, C / s.groups, s.kernel,
                                                         s.kernel};
                if (!rebuilding || st.weights.shape() != wshape) {
                    st.weights = tensor<T>(wshape);
                    st.bias = tensor<T>({s.filters});
                }
                shape = {s.filters, oh, ow};
                break;
            }
            case layer_kind::maxpool: {
                if (shape.size() != 3) {
                    throw shape_error("layer '" + s.label + "': maxpool needs (C,H,W) input, got " +
                                      shape_to_string(shape));
                }
                const std::size_t oh = window_extent(shape[1], s.kernel, s.stride, s.pad,
                                                     s.label.c_str());
                const std::size_t ow = window_extent(shape[2], s.kernel, s.stride, s.pad,
                                                     s.label.c_str());
                shape = {shape[0], oh, ow};
                break;
            }
            case layer_kind::lrn:
                if (shape.size() != 3) {
                    throw shape_error("layer '" + s.label + "': lrn needs (C,H,W) input, got " +
                                      shape_to_string(shape));
                }
                break;
            case layer_kind::fc: {
                std::size_t in_dim = 1;
                for (const std::size_t e : shape) in_dim *= e;
                const std::vector<std::size_t> wshape = {s.units, in_dim};
                if (!rebuilding || st.weights.shape() != wshape) {
                    st.weights = tensor<T>(wshape);
                    st.bias = tensor<T>({s.units});
                }
                shape = {s.units};
                break;
            }
            case layer_kind::relu:
            case layer_kind::dropout:
                break;
            case layer_kind::softmax:
            case layer_kind::output:
                if (shape.size() != 1) {
                    throw shape_error("layer '" + s.label + "': needs a flat input, got " +
                                      shape_to_string(shape));
                }
                break;
            }
            st.out_shape = shape;
        }
    }

    static void init_he(tensor<T>& w, std::size_t fan_in, std::uint64_t seed) {
        rng gen(seed);
        const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
        for (std::size_t i = 0; i < w.size(); ++i) {
            w[i] = static_cast<T>(gen.normal(0.0, stddev));
        }
    }

    void initialize_parameters(std::uint64_t seed) {
        for (std::size_t i = 0; i < layers_.size(); ++i) {
            layer_state& st = layers_[i];
            if (!st.spec.has_weights()) continue;
            const std::size_t fan_in = st.spec.kind == layer_kind::conv
                                           ? st.weights.extent(1) * st.weights.extent(2) *
                                                 st.weights.extent(3)
                                           : st.weights.extent(1);
            init_he(st.weights, fan_in, mix_seed(seed, i));
            st.bias.fill(T(0));
        }
    }

    /// Runs layers 0..last inclusive, returning the output of `last`.
    /// When `fwd` is given, every intermediate output is recorded.
    tensor<T> run_to(const tensor<T>& input, std::size_t last, bool training, rng* gen,
                     forward_pass<T>* fwd) const {
        require_shape(input, layers_.front().out_shape, "network input");
        tensor<T> cur = input;
        for (std::size_t i = 0; i <= last; ++i) {
            const layer_state& st = layers_[i];
            switch (st.spec.kind) {
            case layer_kind::input:
                break;
            case layer_kind::conv:
                cur = conv_forward(cur, st.weights, st.bias, st.spec.stride, st.spec.pad,
                                   st.spec.groups);
                break;
            case layer_kind::relu:
                cur = relu_forward(cur);
                break;
            case layer_kind::lrn:
                cur = lrn_forward(cur, st.spec.lrn);
                break;
            case layer_kind::maxpool: {
                auto res = maxpool_forward(cur, st.spec.kernel, st.spec.stride, st.spec.pad);
                if (fwd) fwd->argmax[i] = std::move(res.argmax);
                cur = std::move(res.output);
                break;
            }
            case layer_kind::fc:
                cur = fc_forward(cur, st.weights, st.bias);
                break;
            case layer_kind::dropout: {
                if (training && !gen) throw error("training-mode dropout needs a generator");
                static rng dummy(0);
                auto res = dropout_forward(cur, st.spec.rate, training, gen ? *gen : dummy);
                if (fwd) fwd->masks[i] = std::move(res.mask);
                cur = std::move(res.output);
                break;
            }
            case layer_kind::softmax:
                cur = softmax(cur);
                break;
            case layer_kind::output:
                break;
            }
            if (fwd) fwd->outs[i] = cur;
        }
        return cur;
    }

    // ----- binary helpers (explicit little-endian) -----

    static void write_u16(std::ostream& out, std::uint16_t v) {
        const char b[2] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff)};
        out.write(b, 2);
    }

    static void write_u32(std::ostream& out, std::uint32_t v) {
        char b[4];
        for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
        out.write(b, 4);
    }

    static std::uint16_t read_u16(std::istream& in, const std::string& path) {
        unsigned char b[2];
        if (!in.read(reinterpret_cast<char*>(b), 2)) throw io_error(path + ": truncated file");
        return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
    }

    static std::uint32_t read_u32(std::istream& in, const std::string& path) {
        unsigned char b[4];
        if (!in.read(reinterpret_cast<char*>(b), 4)) throw io_error(path + ": truncated file");
        return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
               (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
    }

    static void write_tensor(std::ostream& out, const tensor<T>& t) {
        out.put(static_cast<char>(t.shape().size()));
        for (const std::size_t e : t.shape()) {
            write_u32(out, static_cast<std::uint32_t>(e));
        }
        for (std::size_t i = 0; i < t.size(); ++i) {
            const float f = static_cast<float>(t[i]);
            std::uint32_t bits;
            std::memcpy(&bits, &f, 4);
            write_u32(out, bits);
        }
    }

    static tensor<T> read_tensor(std::istream& in, const std::string& path) {
        const int ndim = in.get();
        if (ndim == EOF || ndim <= 0 || ndim > 8) {
            throw io_error(path + ": invalid tensor rank");
        }
        std::vector<std::size_t> shape(static_cast<std::size_t>(ndim));
        std::size_t total = 1;
        for (auto& e : shape) {
            e = read_u32(in, path);
            if (e == 0) throw io_error(path + ": zero tensor extent");
            total *= e;
        }
        tensor<T> t(shape);
        for (std::size_t i = 0; i < total; ++i) {
            const std::uint32_t bits = read_u32(in, path);
            float f;
            std::memcpy(&f, &bits, 4);
            t[i] = static_cast<T>(f);
        }
        return t;
    }

    std::vector<staged_layer> stage_weights(const std::string& path) const {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw io_error("cannot open weights file '" + path + "'");
        char magic[4];
        if (!in.read(magic, 4) || std::memcmp(magic, "GLCW", 4) != 0) {
            throw io_error(path + ": not a weights file (bad magic)");
        }
        const std::uint32_t version = read_u32(in, path);
        if (version != 1) {
            throw io_error(path + ": unsupported weights format version " +
                           std::to_string(version));
        }
        const std::uint32_t count = read_u32(in, path);
        std::vector<staged_layer> staged;
        staged.reserve(count);
        for (std::uint32_t l = 0; l < count; ++l) {
            staged_layer rec;
            const std::uint16_t len = read_u16(in, path);
            rec.label.resize(len);
            if (!in.read(rec.label.data(), len)) throw io_error(path + ": truncated file");
            const int tensors = in.get();
            if (tensors != 2) {
                throw io_error(path + ": layer '" + rec.label + "' should store 2 tensors");
            }
            rec.weights = read_tensor(in, path);
            rec.bias = read_tensor(in, path);
            staged.push_back(std::move(rec));
        }
        return staged;
    }

    compat_load_report commit_staged(std::vector<staged_layer>& staged, bool lenient) {
        compat_load_report report;
        for (auto& rec : staged) {
            bool matched = false;
            for (auto& st : layers_) {
                if (!st.spec.has_weights() || st.spec.label != rec.label) continue;
                if (rec.weights.shape() == st.weights.shape() &&
                    rec.bias.shape() == st.bias.shape()) {
                    st.weights = std::move(rec.weights);
                    st.bias = std::move(rec.bias);
                    matched = true;
                }
                break;
            }
            if (matched) {
                report.loaded.push_back(rec.label);
            } else {
                if (!lenient) {
                    throw io_error("no matching layer for stored '" + rec.label + "'");
                }
                report.skipped.push_back(rec.label);
            }
        }
        return report;
    }
};

using network_f = network<float>;
using network_d = network<double>;

} // namespace glaucnet
