//=======================================================================
// Copyright (c) 2026 the glaucnet authors
// Distributed under the terms of the MIT License.
// (See accompanying file LICENSE or copy at
//  http://opensource.org/licenses/MIT)
//=======================================================================

#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "glaucnet/augment.hpp"
#include "glaucnet/error.hpp"
#include "glaucnet/model.hpp"
#include "glaucnet/rng.hpp"
#include "glaucnet/tensor.hpp"

namespace glaucnet {

struct train_config {
    double learning_rate = 0.0001;
    double momentum = 0.9;
    std::size_t batch_size = 20;
    std::size_t epochs = 80;
    std::uint64_t seed = 0; // drives both the shuffle order and dropout masks

    /// Optional per-epoch hook (epoch index, mean loss); return false to
    /// stop early. Must not consume the training generator.
    std::function<bool(std::size_t, double)> on_epoch;
};

struct train_result {
    std::vector<double> epoch_losses; // mean cross-entropy per epoch
    std::size_t epochs_run = 0;
};

/// Momentum-SGD: v <- momentum * v + grad, w <- w - lr * v.
/// Frozen layers are left untouched.
template <typename T>
class sgdm {
public:
    sgdm(const network<T>& net, double learning_rate, double momentum)
            : lr_(static_cast<T>(learning_rate)), momentum_(static_cast<T>(momentum)),
              velocity_(net.make_grad_buffers()) {}

    void step(network<T>& net, const param_grads<T>& grads) {
        for (std::size_t i = 0; i < net.layer_count(); ++i) {
            auto& st = net.layer(i);
            if (!st.spec.has_weights() || !st.trainable) continue;
            apply(velocity_.weights[i], st.weights, grads.weights[i]);
            apply(velocity_.bias[i], st.bias, grads.bias[i]);
        }
    }

private:
    void apply(tensor<T>& v, tensor<T>& w, const tensor<T>& g) {
        for (std::size_t j = 0; j < w.size(); ++j) {
            v[j] = momentum_ * v[j] + g[j];
            w[j] -= lr_ * v[j];
        }
    }

    T lr_;
    T momentum_;
    param_grads<T> velocity_;
};

/// Minibatch training with momentum SGD. Batch gradients are averaged
/// over the batch (the last batch may be short). The whole run is a
/// deterministic function of the network state, the samples, and the
/// config seed.
template <typename T>
train_result train(network<T>& net, const std::vector<sample>& samples, const train_config& cfg) {
    if (samples.empty()) throw error("training requires at least one sample");
    if (cfg.batch_size == 0) throw error("batch size must be positive");

    std::vector<tensor<T>> inputs;
    std::vector<std::size_t> labels;
    inputs.reserve(samples.size());
    labels.reserve(samples.size());
    for (const auto& s : samples) {
        inputs.push_back(s.input.template cast<T>());
        const std::size_t lbl = static_cast<std::size_t>(s.label);
        if (lbl >= net.config().class_count) {
            throw error("sample '" + s.source_id + "' has class index " + std::to_string(lbl) +
                        " but the model classifies " + std::to_string(net.config().class_count) +
                        " classes");
        }
        labels.push_back(lbl);
    }

    rng gen(cfg.seed);
    sgdm<T> optimizer(net, cfg.learning_rate, cfg.momentum);
    param_grads<T> grads = net.make_grad_buffers();

    std::vector<std::size_t> order(samples.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    train_result result;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        gen.shuffle(order);
        double loss_sum = 0.0;
        std::size_t batch_index = 0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size, ++batch_index) {
            const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
            const std::size_t batch_count = stop - start;
            for (auto& t : grads.weights) t.fill(T(0));
            for (auto& t : grads.bias) t.fill(T(0));
            for (std::size_t k = start; k < stop; ++k) {
                const std::size_t idx = order[k];
                auto fwd = net.forward(inputs[idx], true, gen);
                const double loss = net.backward(fwd, labels[idx], grads);
                if (!std::isfinite(loss)) {
                    throw error("training diverged: non-finite loss at epoch " +
                                std::to_string(epoch + 1) + ", batch " +
                                std::to_string(batch_index + 1));
                }
                loss_sum += loss;
            }
            const T inv = static_cast<T>(1.0 / static_cast<double>(batch_count));
            for (auto& t : grads.weights) t *= inv;
            for (auto& t : grads.bias) t *= inv;
            optimizer.step(net, grads);
        }
        const double mean_loss = loss_sum / static_cast<double>(order.size());
        result.epoch_losses.push_back(mean_loss);
        result.epochs_run = epoch + 1;
        if (cfg.on_epoch && !cfg.on_epoch(epoch, mean_loss)) break;
    }
    return result;
}

/// Fraction of samples whose evaluation-mode prediction matches the label.
template <typename T>
double evaluate_accuracy(const network<T>& net, const std::vector<sample>& samples) {
    if (samples.empty()) throw error("accuracy needs at least one sample");
    std::size_t correct = 0;
    for (const auto& s : samples) {
        const tensor<T> probs = net.predict(s.input.template cast<T>());
        std::vector<double> p(probs.size());
        for (std::size_t i = 0; i < probs.size(); ++i) p[i] = static_cast<double>(probs[i]);
        if (argmax_low_tie(p) == static_cast<std::size_t>(s.label)) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(samples.size());
}

} // namespace glaucnet
