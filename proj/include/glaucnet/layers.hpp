//=======================================================================
// Copyright (c) 2026 the glaucnet authors
// Distributed under the terms of the MIT License.
// (See accompanying file LICENSE or copy at
//  http://opensource.org/licenses/MIT)
//=======================================================================

#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "glaucnet/error.hpp"
#include "glaucnet/rng.hpp"
#include "glaucnet/tensor.hpp"

namespace glaucnet {

/// Output extent of a strided window op: floor((in + 2*pad - kernel)/stride) + 1.
inline std::size_t window_extent(std::size_t in, std::size_t kernel, std::size_t stride,
                                 std::size_t pad, const char* what) {
    if (in + 2 * pad < kernel) {
        throw shape_error(std::string(what) + ": kernel " + std::to_string(kernel) +
                          " does not fit input " + std::to_string(in) + " with pad " +
                          std::to_string(pad));
    }
    return (in + 2 * pad - kernel) / stride + 1;
}

// ---------------------------------------------------------------------
// Convolution (cross-correlation, zero padding, channel groups)
// ---------------------------------------------------------------------

/// input (C,H,W), weights (F, C/groups, KH, KW), bias (F) -> (F, OH, OW).
/// Group g's filters see only input channel block g.
template <typename T>
tensor<T> conv_forward(const tensor<T>& input, const tensor<T>& weights, const tensor<T>& bias,
                       std::size_t stride, std::size_t pad, std::size_t groups) {
    const std::size_t C = input.extent(0), H = input.extent(1), W = input.extent(2);
    const std::size_t F = weights.extent(0), CG = weights.extent(1);
    const std::size_t KH = weights.extent(2), KW = weights.extent(3);
    if (groups == 0 || C % groups != 0 || F % groups != 0 || CG != C / groups) {
        throw shape_error("conv: channels " + std::to_string(C) + ", filters " + std::to_string(F) +
                          " incompatible with groups " + std::to_string(groups) +
                          " and kernel depth " + std::to_string(CG));
    }
    if (bias.size() != F) {
        throw shape_error("conv: bias size " + std::to_string(bias.size()) +
                          " != filter count " + std::to_string(F));
    }
    const std::size_t OH = window_extent(H, KH, stride, pad, "conv");
    const std::size_t OW = window_extent(W, KW, stride, pad, "conv");
    const std::size_t FG = F / groups;

    tensor<T> out({F, OH, OW});
    for (std::size_t f = 0; f < F; ++f) {
        const std::size_t cbase = (f / FG) * CG;
        const T* wf = weights.data() + f * CG * KH * KW;
        for (std::size_t oy = 0; oy < OH; ++oy) {
            const long iy0 = static_cast<long>(oy * stride) - static_cast<long>(pad);
            for (std::size_t ox = 0; ox < OW; ++ox) {
                const long ix0 = static_cast<long>(ox * stride) - static_cast<long>(pad);
                T acc = bias[f];
                for (std::size_t c = 0; c < CG; ++c) {
                    const T* in_c = input.data() + (cbase + c) * H * W;
                    const T* w_c = wf + c * KH * KW;
                    for (std::size_t ky = 0; ky < KH; ++ky) {
                        const long iy = iy0 + static_cast<long>(ky);
                        if (iy < 0 || iy >= static_cast<long>(H)) continue;
                        const T* in_row = in_c + static_cast<std::size_t>(iy) * W;
                        const T* w_row = w_c + ky * KW;
                        for (std::size_t kx = 0; kx < KW; ++kx) {
                            const long ix = ix0 + static_cast<long>(kx);
                            if (ix < 0 || ix >= static_cast<long>(W)) continue;
                            acc += w_row[kx] * in_row[static_cast<std::size_t>(ix)];
                        }
                    }
                }
                out.at(f, oy, ox) = acc;
            }
        }
    }
    return out;
}

template <typename T>
struct conv_grads {
    tensor<T> input;
    tensor<T> weights;
    tensor<T> bias;
};

template <typename T>
conv_grads<T> conv_backward(const tensor<T>& grad_out, const tensor<T>& input,
                            const tensor<T>& weights, std::size_t stride, std::size_t pad,
                            std::size_t groups) {
    const std::size_t C = input.extent(0), H = input.extent(1), W = input.extent(2);
    const std::size_t F = weights.extent(0), CG = weights.extent(1);
    const std::size_t KH = weights.extent(2), KW = weights.extent(3);
    const std::size_t OH = grad_out.extent(1), OW = grad_out.extent(2);
    if (grad_out.extent(0) != F) {
        throw shape_error("conv backward: grad filters " + std::to_string(grad_out.extent(0)) +
                          " != " + std::to_string(F));
    }
    const std::size_t FG = F / groups;

    conv_grads<T> g{tensor<T>({C, H, W}), tensor<T>({F, CG, KH, KW}), tensor<T>({F})};
    for (std::size_t f = 0; f < F; ++f) {
        const std::size_t cbase = (f / FG) * CG;
        const T* wf = weights.data() + f * CG * KH * KW;
        T* gwf = g.weights.data() + f * CG * KH * KW;
        T gb = T(0);
        for (std::size_t oy = 0; oy < OH; ++oy) {
            const long iy0 = static_cast<long>(oy * stride) - static_cast<long>(pad);
            for (std::size_t ox = 0; ox < OW; ++ox) {
                const long ix0 = static_cast<long>(ox * stride) - static_cast<long>(pad);
                const T go = grad_out.at(f, oy, ox);
                gb += go;
                for (std::size_t c = 0; c < CG; ++c) {
                    const T* in_c = input.data() + (cbase + c) * H * W;
                    T* gin_c = g.input.data() + (cbase + c) * H * W;
                    const T* w_c = wf + c * KH * KW;
                    T* gw_c = gwf + c * KH * KW;
                    for (std::size_t ky = 0; ky < KH; ++ky) {
                        const long iy = iy0 + static_cast<long>(ky);
                        if (iy < 0 || iy >= static_cast<long>(H)) continue;
                        const std::size_t row = static_cast<std::size_t>(iy) * W;
                        for (std::size_t kx = 0; kx < KW; ++kx) {
                            const long ix = ix0 + static_cast<long>(kx);
                            if (ix < 0 || ix >= static_cast<long>(W)) continue;
                            const std::size_t idx = row + static_cast<std::size_t>(ix);
                            gw_c[ky * KW + kx] += go * in_c[idx];
                            gin_c[idx] += go * w_c[ky * KW + kx];
                        }
                    }
                }
            }
        }
        g.bias[f] = gb;
    }
    return g;
}

// ---------------------------------------------------------------------
// ReLU
// ---------------------------------------------------------------------

template <typename T>
tensor<T> relu_forward(const tensor<T>& input) {
    tensor<T> out(input.shape());
    for (std::size_t i = 0; i < input.size(); ++i) {
        out[i] = input[i] > T(0) ? input[i] : T(0);
    }
    return out;
}

/// Subgradient 0 at x == 0: gradient passes only where x > 0.
template <typename T>
tensor<T> relu_backward(const tensor<T>& grad_out, const tensor<T>& input) {
    tensor<T> g(input.shape());
    for (std::size_t i = 0; i < input.size(); ++i) {
        g[i] = input[i] > T(0) ? grad_out[i] : T(0);
    }
    return g;
}

// ---------------------------------------------------------------------
// Local response (cross-channel) normalization
// ---------------------------------------------------------------------

struct lrn_params {
    std::size_t depth = 5; // window size n
    double k = 2.0;
    double alpha = 1e-4;
    double beta = 0.75;
};

/// b[c] = a[c] / (k + (alpha/n) * sum_{j in win(c)} a[j]^2)^beta where
/// win(c) = [max(0, c - n/2), min(C-1, c + n/2)].
template <typename T>
tensor<T> lrn_forward(const tensor<T>& input, const lrn_params& p) {
    const std::size_t C = input.extent(0), H = input.extent(1), W = input.extent(2);
    const std::size_t half = p.depth / 2;
    const double scale = p.alpha / static_cast<double>(p.depth);

    tensor<T> out(input.shape());
    for (std::size_t y = 0; y < H; ++y) {
        for (std::size_t x = 0; x < W; ++x) {
            for (std::size_t c = 0; c < C; ++c) {
                const std::size_t lo = c >= half ? c - half : 0;
                const std::size_t hi = std::min(C - 1, c + half);
                double sum_sq = 0.0;
                for (std::size_t j = lo; j <= hi; ++j) {
                    const double a = input.at(j, y, x);
                    sum_sq += a * a;
                }
                const double denom = std::pow(p.k + scale * sum_sq, p.beta);
                out.at(c, y, x) = static_cast<T>(input.at(c, y, x) / denom);
            }
        }
    }
    return out;
}

/// Exact gradient. With s[c] = k + (alpha/n) * sum of squares over win(c)
/// and symmetric windows (j in win(i) iff i in win(j)):
///   da[j] = g[j] * s[j]^-beta
///         - (2*alpha*beta/n) * a[j] * sum_{i in win(j)} g[i] * a[i] * s[i]^(-beta-1)
template <typename T>
tensor<T> lrn_backward(const tensor<T>& grad_out, const tensor<T>& input, const lrn_params& p) {
    const std::size_t C = input.extent(0), H = input.extent(1), W = input.extent(2);
    const std::size_t half = p.depth / 2;
    const double scale = p.alpha / static_cast<double>(p.depth);

    tensor<T> g(input.shape());
    std::vector<double> s_pow(C), term(C);
    for (std::size_t y = 0; y < H; ++y) {
        for (std::size_t x = 0; x < W; ++x) {
            for (std::size_t c = 0; c < C; ++c) {
                const std::size_t lo = c >= half ? c - half : 0;
                const std::size_t hi = std::min(C - 1, c + half);
                double sum_sq = 0.0;
                for (std::size_t j = lo; j <= hi; ++j) {
                    const double a = input.at(j, y, x);
                    sum_sq += a * a;
                }
                const double s = p.k + scale * sum_sq;
                s_pow[c] = std::pow(s, -p.beta);
                // g[i] * a[i] * s[i]^(-beta-1), reused by every j in win(i)
                term[c] = grad_out.at(c, y, x) * input.at(c, y, x) * s_pow[c] / s;
            }
            for (std::size_t c = 0; c < C; ++c) {
                const std::size_t lo = c >= half ? c - half : 0;
                const std::size_t hi = std::min(C - 1, c + half);
                double cross = 0.0;
                for (std::size_t i = lo; i <= hi; ++i) {
                    cross += term[i];
                }
                g.at(c, y, x) = static_cast<T>(grad_out.at(c, y, x) * s_pow[c] -
                                               2.0 * scale * p.beta * input.at(c, y, x) * cross);
            }
        }
    }
    return g;
}

// ---------------------------------------------------------------------
// Max pooling
// ---------------------------------------------------------------------

template <typename T>
struct maxpool_result {
    tensor<T> output;
    std::vector<std::size_t> argmax; // flat input index per output element
};

/// Padding cells act as -inf and are never selected; ties go to the
/// first cell in row-major window order.
template <typename T>
maxpool_result<T> maxpool_forward(const tensor<T>& input, std::size_t window, std::size_t stride,
                                  std::size_t pad) {
    const std::size_t C = input.extent(0), H = input.extent(1), W = input.extent(2);
    const std::size_t OH = window_extent(H, window, stride, pad, "maxpool");
    const std::size_t OW = window_extent(W, window, stride, pad, "maxpool");

    maxpool_result<T> res{tensor<T>({C, OH, OW}), std::vector<std::size_t>(C * OH * OW)};
    std::size_t oi = 0;
    for (std::size_t c = 0; c < C; ++c) {
        const T* in_c = input.data() + c * H * W;
        for (std::size_t oy = 0; oy < OH; ++oy) {
            const long iy0 = static_cast<long>(oy * stride) - static_cast<long>(pad);
            for (std::size_t ox = 0; ox < OW; ++ox, ++oi) {
                const long ix0 = static_cast<long>(ox * stride) - static_cast<long>(pad);
                T best = -std::numeric_limits<T>::infinity();
                std::size_t best_idx = 0;
                bool found = false;
                for (std::size_t ky = 0; ky < window; ++ky) {
                    const long iy = iy0 + static_cast<long>(ky);
                    if (iy < 0 || iy >= static_cast<long>(H)) continue;
                    for (std::size_t kx = 0; kx < window; ++kx) {
                        const long ix = ix0 + static_cast<long>(kx);
                        if (ix < 0 || ix >= static_cast<long>(W)) continue;
                        const std::size_t idx = static_cast<std::size_t>(iy) * W +
                                                static_cast<std::size_t>(ix);
                        if (!found || in_c[idx] > best) {
                            best = in_c[idx];
                            best_idx = c * H * W + idx;
                            found = true;
                        }
                    }
                }
                if (!found) {
                    throw shape_error("maxpool: window contains no input cells");
                }
                res.output[oi] = best;
                res.argmax[oi] = best_idx;
            }
        }
    }
    return res;
}

template <typename T>
tensor<T> maxpool_backward(const tensor<T>& grad_out, const std::vector<std::size_t>& argmax,
                           const std::vector<std::size_t>& input_shape) {
    tensor<T> g(input_shape);
    for (std::size_t i = 0; i < grad_out.size(); ++i) {
        g[argmax[i]] += grad_out[i];
    }
    return g;
}

// ---------------------------------------------------------------------
// Fully connected
// ---------------------------------------------------------------------

/// weights (OUT, IN), bias (OUT). The input tensor is read flattened.
template <typename T>
tensor<T> fc_forward(const tensor<T>& input, const tensor<T>& weights, const tensor<T>& bias) {
    const std::size_t out_dim = weights.extent(0), in_dim = weights.extent(1);
    if (input.size() != in_dim) {
        throw shape_error("fc: input size " + std::to_string(input.size()) + " != weight columns " +
                          std::to_string(in_dim));
    }
    tensor<T> out({out_dim});
    for (std::size_t o = 0; o < out_dim; ++o) {
        const T* w_row = weights.data() + o * in_dim;
        T acc = bias[o];
        for (std::size_t i = 0; i < in_dim; ++i) {
            acc += w_row[i] * input[i];
        }
        out[o] = acc;
    }
    return out;
}

template <typename T>
struct fc_grads {
    tensor<T> input;
    tensor<T> weights;
    tensor<T> bias;
};

template <typename T>
fc_grads<T> fc_backward(const tensor<T>& grad_out, const tensor<T>& input,
                        const tensor<T>& weights) {
    const std::size_t out_dim = weights.extent(0), in_dim = weights.extent(1);
    fc_grads<T> g{tensor<T>(input.shape()), tensor<T>({out_dim, in_dim}), tensor<T>({out_dim})};
    for (std::size_t o = 0; o < out_dim; ++o) {
        const T go = grad_out[o];
        const T* w_row = weights.data() + o * in_dim;
        T* gw_row = g.weights.data() + o * in_dim;
        for (std::size_t i = 0; i < in_dim; ++i) {
            gw_row[i] = go * input[i];
            g.input[i] += go * w_row[i];
        }
        g.bias[o] = go;
    }
    return g;
}

// ---------------------------------------------------------------------
// Dropout (inverted: scaled at train time, identity at evaluation)
// ---------------------------------------------------------------------

template <typename T>
struct dropout_result {
    tensor<T> output;
    tensor<T> mask; // per element: 0 if dropped, 1/(1-p) if kept
};

template <typename T>
dropout_result<T> dropout_forward(const tensor<T>& input, double p, bool training, rng& gen) {
    dropout_result<T> res{tensor<T>(input.shape()), tensor<T>(input.shape())};
    if (!training || p <= 0.0) {
        res.output = input;
        res.mask.fill(T(1));
        return res;
    }
    const T keep_scale = static_cast<T>(1.0 / (1.0 - p));
    for (std::size_t i = 0; i < input.size(); ++i) {
        const T m = gen.uniform() >= p ? keep_scale : T(0);
        res.mask[i] = m;
        res.output[i] = input[i] * m;
    }
    return res;
}

template <typename T>
tensor<T> dropout_backward(const tensor<T>& grad_out, const tensor<T>& mask) {
    tensor<T> g(grad_out.shape());
    for (std::size_t i = 0; i < grad_out.size(); ++i) {
        g[i] = grad_out[i] * mask[i];
    }
    return g;
}

// ---------------------------------------------------------------------
// Softmax and cross-entropy
// ---------------------------------------------------------------------

/// Numerically stable softmax: exp(x - max(x)) / sum.
template <typename T>
tensor<T> softmax(const tensor<T>& logits) {
    tensor<T> out(logits.shape());
    T max_v = logits[0];
    for (std::size_t i = 1; i < logits.size(); ++i) {
        max_v = std::max(max_v, logits[i]);
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        const double e = std::exp(static_cast<double>(logits[i] - max_v));
        out[i] = static_cast<T>(e);
        sum += e;
    }
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = static_cast<T>(out[i] / sum);
    }
    return out;
}

/// loss = -ln p[label], probabilities clamped below at 1e-12.
template <typename T>
double cross_entropy(const tensor<T>& probabilities, std::size_t label) {
    if (label >= probabilities.size()) {
        throw shape_error("cross_entropy: label " + std::to_string(label) + " out of range");
    }
    const double p = std::max(static_cast<double>(probabilities[label]), 1e-12);
    return -std::log(p);
}

/// Gradient of -ln softmax(logits)[label] with respect to the logits,
/// fused through the softmax: p - onehot(label).
template <typename T>
tensor<T> cross_entropy_logit_grad(const tensor<T>& probabilities, std::size_t label) {
    tensor<T> g(probabilities.shape());
    for (std::size_t i = 0; i < probabilities.size(); ++i) {
        g[i] = probabilities[i] - (i == label ? T(1) : T(0));
    }
    return g;
}

} // namespace glaucnet
