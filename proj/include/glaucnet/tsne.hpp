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
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "glaucnet/error.hpp"
#include "glaucnet/rng.hpp"
#include "glaucnet/tensor.hpp"

namespace glaucnet {

// ---------------------------------------------------------------------
// Input affinities: symmetrized conditional Gaussians whose per-point
// bandwidths are tuned so every conditional distribution has entropy
// ln(perplexity).
// ---------------------------------------------------------------------

struct affinity_result {
    tensor_d p;                // (N, N), symmetric, zero diagonal, sums to 1
    std::vector<double> sigma; // per-point Gaussian bandwidth
};

namespace detail {

/// Entropy (nats) of the conditional distribution for one point, and the
/// distribution itself. Uses shifted exponentials, so tiny sigmas stay
/// finite.
inline double conditional_row(const std::vector<double>& sq_dist, std::size_t self, double sigma,
                              std::vector<double>& out_p) {
    const std::size_t n = sq_dist.size();
    const double inv = 1.0 / (2.0 * sigma * sigma);
    double min_sq = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < n; ++k) {
        if (k != self) min_sq = std::min(min_sq, sq_dist[k]);
    }
    double sum = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        if (k == self) {
            out_p[k] = 0.0;
            continue;
        }
        out_p[k] = std::exp(-(sq_dist[k] - min_sq) * inv);
        sum += out_p[k];
    }
    // H = ln(sum) - (1/sum) * sum_k p'_k * l_k with l_k the shifted logits
    double weighted = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        if (k == self) continue;
        weighted += out_p[k] * (-(sq_dist[k] - min_sq) * inv);
        out_p[k] /= sum;
    }
    return std::log(sum) - weighted / sum;
}

} // namespace detail

inline affinity_result input_affinities(const tensor_d& points, double perplexity) {
    if (points.rank() != 2) {
        throw shape_error("affinities expect an (N, D) matrix, got " + points.shape_string());
    }
    const std::size_t n = points.extent(0);
    const std::size_t d = points.extent(1);
    if (n < 3) throw error("affinities need at least 3 points");
    if (!(perplexity > 1.0) || perplexity > static_cast<double>(n - 1)) {
        throw error("perplexity must lie in (1, N-1], got " + std::to_string(perplexity) +
                    " for N=" + std::to_string(n));
    }

    tensor_d sq({n, n});
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            double acc = 0.0;
            for (std::size_t k = 0; k < d; ++k) {
                const double diff = points.at(i, k) - points.at(j, k);
                acc += diff * diff;
            }
            sq.at(i, j) = acc;
            sq.at(j, i) = acc;
        }
    }

    const double target = std::log(perplexity);
    affinity_result res{tensor_d({n, n}), std::vector<double>(n)};
    tensor_d cond({n, n});
    std::vector<double> row(n), prob(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < n; ++k) row[k] = sq.at(i, k);
        // entropy grows with sigma, so bisect (geometrically, i.e. on
        // log sigma — the bracket spans 40 orders of magnitude)
        double lo = 1e-20, hi = 1e20, sigma = 1.0;
        for (int step = 0; step < 64; ++step) {
            sigma = std::sqrt(lo * hi);
            const double entropy = detail::conditional_row(row, i, sigma, prob);
            if (std::abs(entropy - target) <= 1e-5) break;
            if (entropy < target) {
                lo = sigma;
            } else {
                hi = sigma;
            }
        }
        res.sigma[i] = sigma;
        for (std::size_t k = 0; k < n; ++k) cond.at(i, k) = prob[k];
    }

    const double scale = 1.0 / (2.0 * static_cast<double>(n));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            res.p.at(i, j) = (cond.at(i, j) + cond.at(j, i)) * scale;
        }
    }
    return res;
}

// ---------------------------------------------------------------------
// Low-dimensional similarities use the Student-t kernel
// w_ij = 1 / (1 + ||y_i - y_j||^2), q_ij = w_ij / sum w.
// ---------------------------------------------------------------------

namespace detail {

inline void student_weights(const tensor_d& y, tensor_d& w, double& z) {
    const std::size_t n = y.extent(0);
    const std::size_t d = y.extent(1);
    z = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        w.at(i, i) = 0.0;
        for (std::size_t j = i + 1; j < n; ++j) {
            double acc = 0.0;
            for (std::size_t k = 0; k < d; ++k) {
                const double diff = y.at(i, k) - y.at(j, k);
                acc += diff * diff;
            }
            const double wij = 1.0 / (1.0 + acc);
            w.at(i, j) = wij;
            w.at(j, i) = wij;
            z += 2.0 * wij;
        }
    }
}

} // namespace detail

/// KL(P || Q(Y)); zero-probability input pairs contribute nothing and
/// output similarities are clamped below at 1e-12.
inline double tsne_kl(const tensor_d& p, const tensor_d& y) {
    const std::size_t n = y.extent(0);
    tensor_d w({n, n});
    double z = 0.0;
    detail::student_weights(y, w, z);
    double kl = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            const double pij = p.at(i, j);
            if (pij <= 0.0) continue;
            const double qij = std::max(w.at(i, j) / z, 1e-12);
            kl += pij * std::log(pij / qij);
        }
    }
    return kl;
}

/// dKL/dY: grad_i = 4 * sum_j (p_ij - q_ij) * w_ij * (y_i - y_j).
inline tensor_d tsne_gradient(const tensor_d& p, const tensor_d& y) {
    const std::size_t n = y.extent(0);
    const std::size_t d = y.extent(1);
    tensor_d w({n, n});
    double z = 0.0;
    detail::student_weights(y, w, z);
    tensor_d grad({n, d});
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            const double wij = w.at(i, j);
            const double factor = 4.0 * (p.at(i, j) - wij / z) * wij;
            for (std::size_t k = 0; k < d; ++k) {
                grad.at(i, k) += factor * (y.at(i, k) - y.at(j, k));
            }
        }
    }
    return grad;
}

// ---------------------------------------------------------------------
// Gradient descent with momentum and early exaggeration
// ---------------------------------------------------------------------

struct tsne_config {
    double perplexity = 30.0;
    std::size_t iterations = 500;
    double learning_rate = 100.0;
    double initial_momentum = 0.5;
    double final_momentum = 0.8;
    std::size_t momentum_switch = 250; // iteration where momentum steps up
    double exaggeration = 4.0;
    std::size_t exaggeration_iters = 100;
    std::uint64_t seed = 0;
};

struct tsne_result {
    tensor_d embedding;           // (N, 2)
    std::vector<double> kl_trace; // entry 0 before any update, then one per iteration
    std::vector<double> sigma;
};

inline tsne_result tsne_embed(const tensor_d& points, const tsne_config& cfg) {
    const affinity_result aff = input_affinities(points, cfg.perplexity);
    const std::size_t n = points.extent(0);

    tsne_result res;
    res.sigma = aff.sigma;
    res.embedding = tensor_d({n, 2});
    rng gen(cfg.seed);
    for (std::size_t i = 0; i < res.embedding.size(); ++i) {
        res.embedding[i] = gen.normal(0.0, 1e-4);
    }

    tensor_d exaggerated = aff.p;
    exaggerated *= cfg.exaggeration;

    tensor_d& y = res.embedding;
    tensor_d velocity({n, 2});
    res.kl_trace.reserve(cfg.iterations + 1);
    res.kl_trace.push_back(tsne_kl(aff.p, y)); // the trace always scores the true affinities
    for (std::size_t iter = 0; iter < cfg.iterations; ++iter) {
        const tensor_d& p_now = iter < cfg.exaggeration_iters ? exaggerated : aff.p;
        const tensor_d grad = tsne_gradient(p_now, y);
        const double momentum =
            iter < cfg.momentum_switch ? cfg.initial_momentum : cfg.final_momentum;
        for (std::size_t i = 0; i < y.size(); ++i) {
            velocity[i] = momentum * velocity[i] - cfg.learning_rate * grad[i];
            y[i] += velocity[i];
        }
        // keep the embedding centered; KL is translation invariant
        double mean[2] = {0.0, 0.0};
        for (std::size_t i = 0; i < n; ++i) {
            mean[0] += y.at(i, std::size_t{0});
            mean[1] += y.at(i, std::size_t{1});
        }
        mean[0] /= static_cast<double>(n);
        mean[1] /= static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) {
            y.at(i, std::size_t{0}) -= mean[0];
            y.at(i, std::size_t{1}) -= mean[1];
        }
        res.kl_trace.push_back(tsne_kl(aff.p, y));
    }
    return res;
}

// ---------------------------------------------------------------------
// Embedding quality and visualization
// ---------------------------------------------------------------------

/// Mean silhouette over all points (Euclidean distances). Points in
/// singleton clusters score 0.
inline double embedding_silhouette(const tensor_d& y, const std::vector<int>& cluster) {
    const std::size_t n = y.extent(0);
    const std::size_t d = y.extent(1);
    if (cluster.size() != n) {
        throw error("silhouette: need one cluster id per point");
    }
    std::vector<int> ids;
    for (const int c : cluster) {
        if (std::find(ids.begin(), ids.end(), c) == ids.end()) ids.push_back(c);
    }
    if (ids.size() < 2) throw error("silhouette: need at least two clusters");

    const auto dist = [&](std::size_t i, std::size_t j) {
        double acc = 0.0;
        for (std::size_t k = 0; k < d; ++k) {
            const double diff = y.at(i, k) - y.at(j, k);
            acc += diff * diff;
        }
        return std::sqrt(acc);
    };

    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double own_sum = 0.0;
        std::size_t own_count = 0;
        double best_other = std::numeric_limits<double>::infinity();
        for (const int c : ids) {
            if (c == cluster[i]) continue;
            double sum = 0.0;
            std::size_t count = 0;
            for (std::size_t j = 0; j < n; ++j) {
                if (cluster[j] != c) continue;
                sum += dist(i, j);
                ++count;
            }
            if (count > 0) best_other = std::min(best_other, sum / static_cast<double>(count));
        }
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i || cluster[j] != cluster[i]) continue;
            own_sum += dist(i, j);
            ++own_count;
        }
        if (own_count == 0) continue; // singleton scores 0
        const double a = own_sum / static_cast<double>(own_count);
        const double b = best_other;
        total += (b - a) / std::max(a, b);
    }
    return total / static_cast<double>(n);
}

/// Self-contained SVG scatter plot; byte-deterministic for a given
/// embedding (coordinates printed with three decimals).
inline void write_scatter_svg(std::ostream& out, const tensor_d& y,
                              const std::vector<int>& cluster, std::size_t width = 640,
                              std::size_t height = 480) {
    static constexpr const char* palette[] = {"#e41a1c", "#377eb8", "#4daf4a", "#984ea3",
                                              "#ff7f00", "#a65628", "#f781bf", "#999999"};
    constexpr std::size_t palette_size = sizeof(palette) / sizeof(palette[0]);
    const std::size_t n = y.extent(0);
    if (cluster.size() != n) {
        throw error("scatter plot: need one cluster id per point");
    }
    double min_x = y.at(std::size_t{0}, std::size_t{0}), max_x = min_x;
    double min_y = y.at(std::size_t{0}, std::size_t{1}), max_y = min_y;
    for (std::size_t i = 1; i < n; ++i) {
        min_x = std::min(min_x, y.at(i, std::size_t{0}));
        max_x = std::max(max_x, y.at(i, std::size_t{0}));
        min_y = std::min(min_y, y.at(i, std::size_t{1}));
        max_y = std::max(max_y, y.at(i, std::size_t{1}));
    }
    const double span_x = max_x - min_x > 0.0 ? max_x - min_x : 1.0;
    const double span_y = max_y - min_y > 0.0 ? max_y - min_y : 1.0;
    const double margin = 0.05;
    const double usable_w = static_cast<double>(width) * (1.0 - 2.0 * margin);
    const double usable_h = static_cast<double>(height) * (1.0 - 2.0 * margin);

    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
    out << "  <rect width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n";
    char buf[64];
    for (std::size_t i = 0; i < n; ++i) {
        const double px = static_cast<double>(width) * margin +
                          (y.at(i, std::size_t{0}) - min_x) / span_x * usable_w;
        // SVG's y axis points down; flip so larger coordinates plot higher
        const double py = static_cast<double>(height) * margin +
                          (max_y - y.at(i, std::size_t{1})) / span_y * usable_h;
        const char* color =
            palette[static_cast<std::size_t>(cluster[i] < 0 ? -cluster[i] : cluster[i]) %
                    palette_size];
        std::snprintf(buf, sizeof(buf), "%.3f\" cy=\"%.3f", px, py);
        out << "  <circle cx=\"" << buf << "\" r=\"4\" fill=\"" << color << "\"/>\n";
    }
    out << "</svg>\n";
}

} // namespace glaucnet
