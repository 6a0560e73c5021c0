//=======================================================================
// Copyright (c) 2026 the glaucnet authors
// Distributed under the terms of the MIT License.
// (See accompanying file LICENSE or copy at
//  http://opensource.org/licenses/MIT)
//=======================================================================

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "gradcheck.hpp"
#include "glaucnet/tsne.hpp"

using namespace glaucnet;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::MessageMatches;
using Catch::Matchers::WithinAbs;

namespace {

tensor_d random_points(std::size_t n, std::size_t d, std::uint64_t seed) {
    tensor_d points({n, d});
    rng gen(seed);
    for (std::size_t i = 0; i < points.size(); ++i) points[i] = gen.uniform(-1.0, 1.0);
    return points;
}

struct blob_data {
    tensor_d points;
    std::vector<int> cluster;
};

/// `clusters` tight Gaussian blobs, pairwise `separation` apart along
/// distinct axes (requires dim >= clusters).
blob_data make_blobs(std::size_t clusters, std::size_t per_cluster, std::size_t dim,
                     double separation, double noise, std::uint64_t seed) {
    blob_data data;
    data.points = tensor_d({clusters * per_cluster, dim});
    rng gen(seed);
    std::size_t row = 0;
    for (std::size_t c = 0; c < clusters; ++c) {
        for (std::size_t i = 0; i < per_cluster; ++i, ++row) {
            for (std::size_t k = 0; k < dim; ++k) {
                const double center = (k == c) ? separation : 0.0;
                data.points[row * dim + k] = center + gen.normal(0.0, noise);
            }
        }
        data.cluster.insert(data.cluster.end(), per_cluster, static_cast<int>(c));
    }
    return data;
}

double entry(const tensor_d& m, std::size_t i, std::size_t j) {
    return m[i * m.extent(1) + j];
}

} // namespace

// ---------------------------------------------------------------------
// input affinities
// ---------------------------------------------------------------------

TEST_CASE("tsne/affinities/laws", "[tsne]") {
    const tensor_d points = random_points(10, 4, 3);
    const double perplexity = 5.0;
    const affinity_result res = input_affinities(points, perplexity);
    REQUIRE(res.p.shape() == std::vector<std::size_t>{10, 10});
    REQUIRE(res.sigma.size() == 10);

    double total = 0.0;
    for (std::size_t i = 0; i < 10; ++i) {
        CHECK(entry(res.p, i, i) == 0.0);
        for (std::size_t j = 0; j < 10; ++j) {
            REQUIRE(entry(res.p, i, j) >= 0.0);
            REQUIRE(entry(res.p, i, j) == entry(res.p, j, i));
            total += entry(res.p, i, j);
        }
    }
    CHECK_THAT(total, WithinAbs(1.0, 1e-9));

    // independent check: the conditional distribution built from the
    // returned bandwidth hits the requested perplexity (entropy in nats)
    for (std::size_t i = 0; i < 10; ++i) {
        CAPTURE(i);
        REQUIRE(res.sigma[i] > 0.0);
        std::vector<double> cond(10, 0.0);
        double sum = 0.0;
        for (std::size_t j = 0; j < 10; ++j) {
            if (j == i) continue;
            double sq = 0.0;
            for (std::size_t k = 0; k < 4; ++k) {
                const double diff = points[i * 4 + k] - points[j * 4 + k];
                sq += diff * diff;
            }
            cond[j] = std::exp(-sq / (2.0 * res.sigma[i] * res.sigma[i]));
            sum += cond[j];
        }
        double entropy = 0.0;
        for (std::size_t j = 0; j < 10; ++j) {
            if (j == i || cond[j] == 0.0) continue;
            const double pj = cond[j] / sum;
            entropy -= pj * std::log(pj);
        }
        CHECK_THAT(entropy, WithinAbs(std::log(perplexity), 1e-4));
    }
}

TEST_CASE("tsne/affinities/equidistant-points-are-uniform", "[tsne]") {
    // equilateral triangle: every conditional row is uniform over the
    // two neighbours, so every off-diagonal pair gets 1/6
    tensor_d triangle({3, 2});
    triangle[0] = 0.0;
    triangle[1] = 0.0;
    triangle[2] = 1.0;
    triangle[3] = 0.0;
    triangle[4] = 0.5;
    triangle[5] = std::sqrt(3.0) / 2.0;
    const affinity_result tri = input_affinities(triangle, 2.0); // perplexity at its cap N-1
    for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t j = 0; j < 3; ++j) {
            if (i == j) continue;
            CHECK_THAT(entry(tri.p, i, j), WithinAbs(1.0 / 6.0, 1e-6));
        }
    }

    // regular simplex: rows of the 4x4 identity are pairwise equidistant
    tensor_d simplex({4, 4});
    for (std::size_t i = 0; i < 4; ++i) simplex[i * 4 + i] = 1.0;
    const affinity_result sim = input_affinities(simplex, 3.0);
    for (std::size_t i = 0; i < 4; ++i) {
        for (std::size_t j = 0; j < 4; ++j) {
            if (i == j) continue;
            CHECK_THAT(entry(sim.p, i, j), WithinAbs(1.0 / 12.0, 1e-6));
        }
    }
}

TEST_CASE("tsne/affinities/validation", "[tsne]") {
    CHECK_THROWS_MATCHES(input_affinities(random_points(2, 3, 0), 1.5), error,
                         MessageMatches(ContainsSubstring("at least 3 points")));
    CHECK_THROWS_MATCHES(input_affinities(random_points(5, 3, 0), 1.0), error,
                         MessageMatches(ContainsSubstring("perplexity")));
    CHECK_THROWS_MATCHES(input_affinities(random_points(5, 3, 0), 4.5), error,
                         MessageMatches(ContainsSubstring("perplexity")));
    CHECK_THROWS_AS(input_affinities(tensor_d({5}), 2.0), shape_error);
    // N-1 itself is allowed
    CHECK_NOTHROW(input_affinities(random_points(5, 3, 0), 4.0));
}

// ---------------------------------------------------------------------
// KL divergence and its gradient
// ---------------------------------------------------------------------

TEST_CASE("tsne/kl/non-negative", "[tsne]") {
    const tensor_d points = random_points(8, 3, 5);
    const affinity_result aff = input_affinities(points, 4.0);
    tensor_d y = random_points(8, 2, 6);
    CHECK(tsne_kl(aff.p, y) >= 0.0);
}

TEST_CASE("tsne/kl/gradient", "[tsne][gradcheck]") {
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        CAPTURE(seed);
        const tensor_d points = random_points(6, 3, 10 + seed);
        const affinity_result aff = input_affinities(points, 3.0);
        tensor_d y = random_points(6, 2, 20 + seed);
        const tensor_d analytic = tsne_gradient(aff.p, y);
        const auto loss = [&] { return tsne_kl(aff.p, y); };
        CHECK(gradcheck::max_mismatch(y, analytic, loss) <= 1e-4);
    }
}

// ---------------------------------------------------------------------
// the embedding loop
// ---------------------------------------------------------------------

TEST_CASE("tsne/embed/initialization-and-trace-start", "[tsne]") {
    const tensor_d points = random_points(7, 3, 31);
    tsne_config cfg;
    cfg.perplexity = 3.0;
    cfg.iterations = 0;
    cfg.seed = 77;
    const tsne_result res = tsne_embed(points, cfg);

    // reconstruct the seeded initialization independently
    tensor_d y0({7, 2});
    rng gen(77);
    for (std::size_t i = 0; i < y0.size(); ++i) y0[i] = gen.normal(0.0, 1e-4);
    REQUIRE(res.embedding.shape() == y0.shape());
    for (std::size_t i = 0; i < y0.size(); ++i) REQUIRE(res.embedding[i] == y0[i]);

    // trace entry 0 scores the untouched initialization
    const affinity_result aff = input_affinities(points, 3.0);
    REQUIRE(res.kl_trace.size() == 1);
    CHECK_THAT(res.kl_trace[0], WithinAbs(tsne_kl(aff.p, y0), 1e-12));
    CHECK(res.sigma == aff.sigma);
}

TEST_CASE("tsne/embed/one-step-matches-manual-update", "[tsne]") {
    const tensor_d points = random_points(6, 3, 41);
    tsne_config cfg;
    cfg.perplexity = 3.0;
    cfg.iterations = 1;
    cfg.learning_rate = 100.0;
    cfg.exaggeration = 4.0;
    cfg.exaggeration_iters = 100;
    cfg.seed = 5;
    const tsne_result res = tsne_embed(points, cfg);

    const affinity_result aff = input_affinities(points, 3.0);
    tensor_d y({6, 2});
    rng gen(5);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = gen.normal(0.0, 1e-4);

    // gradient of the exaggerated objective, momentum starts at zero
    tensor_d p4 = aff.p;
    p4 *= 4.0;
    const tensor_d grad = tsne_gradient(p4, y);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += -cfg.learning_rate * grad[i];
    double mean[2] = {0.0, 0.0};
    for (std::size_t i = 0; i < 6; ++i) {
        mean[0] += y[i * 2];
        mean[1] += y[i * 2 + 1];
    }
    mean[0] /= 6.0;
    mean[1] /= 6.0;
    for (std::size_t i = 0; i < 6; ++i) {
        y[i * 2] -= mean[0];
        y[i * 2 + 1] -= mean[1];
    }

    REQUIRE(res.kl_trace.size() == 2);
    for (std::size_t i = 0; i < y.size(); ++i) {
        CHECK_THAT(res.embedding[i], WithinAbs(y[i], 1e-15));
    }
    // the trace is scored against the TRUE affinities even while the
    // optimizer sees the exaggerated ones
    CHECK_THAT(res.kl_trace[1], WithinAbs(tsne_kl(aff.p, y), 1e-12));
}

TEST_CASE("tsne/embed/deterministic", "[tsne]") {
    const blob_data data = make_blobs(2, 6, 4, 10.0, 0.5, 2);
    tsne_config cfg;
    cfg.perplexity = 4.0;
    cfg.iterations = 40;
    cfg.exaggeration_iters = 10;
    cfg.seed = 3;
    const tsne_result a = tsne_embed(data.points, cfg);
    const tsne_result b = tsne_embed(data.points, cfg);
    CHECK(a.embedding == b.embedding);
    CHECK(a.kl_trace == b.kl_trace);

    tsne_config other = cfg;
    other.seed = 4;
    const tsne_result c = tsne_embed(data.points, other);
    CHECK_FALSE(a.embedding == c.embedding);
}

TEST_CASE("tsne/embed/separates-clusters", "[tsne][slow]") {
    const blob_data data = make_blobs(3, 8, 8, 20.0, 0.5, 7);
    tsne_config cfg;
    cfg.perplexity = 5.0;
    cfg.iterations = 250;
    cfg.exaggeration_iters = 50;
    cfg.seed = 1;
    const tsne_result res = tsne_embed(data.points, cfg);
    REQUIRE(res.kl_trace.size() == 251);
    CHECK(res.kl_trace.back() < res.kl_trace.front());
    CHECK(embedding_silhouette(res.embedding, data.cluster) > 0.5);
}

// ---------------------------------------------------------------------
// silhouette
// ---------------------------------------------------------------------

TEST_CASE("tsne/silhouette/hand-computed", "[tsne]") {
    tensor_d y({4, 2});
    y[0] = 0.0;  y[1] = 0.0;  // cluster 0
    y[2] = 1.0;  y[3] = 0.0;  // cluster 0
    y[4] = 10.0; y[5] = 0.0;  // cluster 1
    y[6] = 11.0; y[7] = 0.0;  // cluster 1
    const std::vector<int> ids = {0, 0, 1, 1};
    // per point: a=1; b = 10.5, 9.5, 9.5, 10.5 => mean s = (19/21 + 17/19) / 2
    const double expected = (19.0 / 21.0 + 17.0 / 19.0) / 2.0;
    CHECK_THAT(embedding_silhouette(y, ids), WithinAbs(expected, 1e-12));

    // mixing the clusters together destroys the score
    const std::vector<int> shuffled = {0, 1, 0, 1};
    CHECK(embedding_silhouette(y, shuffled) < 0.0);
}

TEST_CASE("tsne/silhouette/singletons-score-zero", "[tsne]") {
    tensor_d y({3, 2});
    y[0] = 0.0;
    y[1] = 0.0;
    y[2] = 0.0;
    y[3] = 1.0;
    y[4] = 8.0;
    y[5] = 0.0;
    // point 2 is alone in cluster 1: it contributes 0 to the mean
    const std::vector<int> ids = {0, 0, 1};
    // points 0 and 1: a = 1; b = dist to the singleton
    const double b0 = std::sqrt(64.0);
    const double b1 = std::sqrt(64.0 + 1.0);
    const double expected = ((b0 - 1.0) / b0 + (b1 - 1.0) / b1) / 3.0;
    CHECK_THAT(embedding_silhouette(y, ids), WithinAbs(expected, 1e-12));
}

TEST_CASE("tsne/silhouette/validation", "[tsne]") {
    tensor_d y({3, 2});
    CHECK_THROWS_MATCHES(embedding_silhouette(y, {0, 1}), error,
                         MessageMatches(ContainsSubstring("one cluster id per point")));
    CHECK_THROWS_MATCHES(embedding_silhouette(y, {0, 0, 0}), error,
                         MessageMatches(ContainsSubstring("two clusters")));
}

// ---------------------------------------------------------------------
// scatter plot
// ---------------------------------------------------------------------

TEST_CASE("tsne/svg/structure-and-determinism", "[tsne]") {
    tensor_d y({5, 2});
    rng gen(13);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = gen.uniform(-3.0, 3.0);
    const std::vector<int> ids = {0, 0, 1, 1, 2};

    std::ostringstream svg_a, svg_b;
    write_scatter_svg(svg_a, y, ids);
    write_scatter_svg(svg_b, y, ids);
    const std::string svg = svg_a.str();
    CHECK(svg == svg_b.str());

    CHECK(svg.rfind("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n", 0) == 0);
    CHECK_THAT(svg, ContainsSubstring("<svg xmlns=\"http://www.w3.org/2000/svg\""));
    CHECK_THAT(svg, ContainsSubstring("fill=\"white\""));
    CHECK_THAT(svg, ContainsSubstring("width=\"640\""));
    CHECK_THAT(svg, ContainsSubstring("height=\"480\""));
    CHECK_THAT(svg, ContainsSubstring("</svg>\n"));
    std::size_t circles = 0;
    for (std::size_t pos = svg.find("<circle"); pos != std::string::npos;
         pos = svg.find("<circle", pos + 1)) {
        ++circles;
    }
    CHECK(circles == 5);
    // one palette color per cluster id
    CHECK_THAT(svg, ContainsSubstring("#e41a1c"));
    CHECK_THAT(svg, ContainsSubstring("#377eb8"));
    CHECK_THAT(svg, ContainsSubstring("#4daf4a"));
    CHECK_THAT(svg, ContainsSubstring("r=\"4\""));

    CHECK_THROWS_MATCHES(write_scatter_svg(svg_a, y, {0, 1}), error,
                         MessageMatches(ContainsSubstring("one cluster id per point")));
}

TEST_CASE("tsne/svg/flips-the-vertical-axis", "[tsne]") {
    // two points stacked vertically: the higher data point must get the
    // smaller pixel y coordinate
    tensor_d y({2, 2});
    y[0] = 0.0;
    y[1] = 0.0; // low point
    y[2] = 0.0;
    y[3] = 1.0; // high point
    std::ostringstream svg;
    write_scatter_svg(svg, y, {0, 1}, 100, 200);
    const std::string text = svg.str();
    // margin 5% of 200 = 10, usable 180: high point at py=10, low at 190
    CHECK_THAT(text, ContainsSubstring("cy=\"190.000\""));
    CHECK_THAT(text, ContainsSubstring("cy=\"10.000\""));
}
