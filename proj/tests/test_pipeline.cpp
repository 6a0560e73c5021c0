//=======================================================================
// Copyright (c) 2026 the glaucnet authors
// Distributed under the terms of the MIT License.
// (See accompanying file LICENSE or copy at
//  http://opensource.org/licenses/MIT)
//=======================================================================

#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "glaucnet/dataset.hpp"
#include "glaucnet/experiment.hpp"
#include "glaucnet/fusion.hpp"
#include "glaucnet/metrics.hpp"

using namespace glaucnet;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::MessageMatches;
using Catch::Matchers::WithinAbs;

namespace {

std::filesystem::path fresh_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("glaucnet_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    out << content;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_test_image(const std::filesystem::path& path, std::uint8_t base) {
    image_u8 img(2, 2, 3);
    for (std::size_t i = 0; i < img.data.size(); ++i) {
        img.data[i] = static_cast<std::uint8_t>(base + i);
    }
    save_pnm(img, path.string());
}

decision make_decision(stream_tag tag, int label, std::vector<double> probs) {
    decision d;
    d.stream = tag;
    d.label = static_cast<class_label>(label);
    d.probabilities = std::move(probs);
    return d;
}

/// A binary decision whose probability vector is consistent with its label.
decision vote(stream_tag tag, int label) {
    return label == 0 ? make_decision(tag, 0, {0.7, 0.3}) : make_decision(tag, 1, {0.2, 0.8});
}

} // namespace

// ---------------------------------------------------------------------
// decision fusion
// ---------------------------------------------------------------------

TEST_CASE("fusion/majority/binary-truth-table", "[fusion]") {
    for (int r = 0; r <= 1; ++r) {
        for (int g = 0; g <= 1; ++g) {
            for (int b = 0; b <= 1; ++b) {
                CAPTURE(r, g, b);
                const std::vector<decision> parts = {
                    vote(stream_tag::r, r), vote(stream_tag::g, g), vote(stream_tag::b, b)};
                const fused_decision fused = fuse_majority(parts);
                const int expected = (r + g + b >= 2) ? 1 : 0;
                CHECK(static_cast<int>(fused.label) == expected);
            }
        }
    }
}

TEST_CASE("fusion/majority/vote-beats-confidence", "[fusion]") {
    // two weak glaucoma votes outvote one confident normal vote
    const std::vector<decision> parts = {
        make_decision(stream_tag::r, 0, {0.99, 0.01}),
        make_decision(stream_tag::g, 1, {0.45, 0.55}),
        make_decision(stream_tag::b, 1, {0.45, 0.55}),
    };
    CHECK(fuse_majority(parts).label == class_label::glaucoma);
    // ... while mean probability lets the confident vote win
    CHECK(fuse_mean_probability(parts).label == class_label::normal);
}

TEST_CASE("fusion/majority/three-way-tie-uses-mean", "[fusion]") {
    const std::vector<decision> parts = {
        make_decision(stream_tag::r, 0, {0.50, 0.30, 0.20}),
        make_decision(stream_tag::g, 1, {0.10, 0.60, 0.30}),
        make_decision(stream_tag::b, 2, {0.10, 0.20, 0.70}),
    };
    const fused_decision fused = fuse_majority(parts);
    CHECK(static_cast<int>(fused.label) == 2); // mean = {0.233, 0.367, 0.400}
    CHECK_THAT(fused.mean_probabilities[2], WithinAbs(0.4, 1e-12));
}

TEST_CASE("fusion/mean-probability/averages", "[fusion]") {
    const std::vector<decision> parts = {
        make_decision(stream_tag::r, 0, {0.9, 0.1}),
        make_decision(stream_tag::g, 1, {0.4, 0.6}),
        make_decision(stream_tag::b, 1, {0.35, 0.65}),
    };
    const fused_decision fused = fuse_mean_probability(parts);
    CHECK_THAT(fused.mean_probabilities[0], WithinAbs(0.55, 1e-12));
    CHECK_THAT(fused.mean_probabilities[1], WithinAbs(0.45, 1e-12));
    CHECK(fused.label == class_label::normal);
    // exact tie resolves to the lower class index
    const std::vector<decision> tied = {
        make_decision(stream_tag::r, 0, {0.5, 0.5}),
        make_decision(stream_tag::g, 0, {0.5, 0.5}),
        make_decision(stream_tag::b, 0, {0.5, 0.5}),
    };
    CHECK(fuse_mean_probability(tied).label == class_label::normal);
}

TEST_CASE("fusion/validation", "[fusion]") {
    const auto r = vote(stream_tag::r, 0);
    const auto g = vote(stream_tag::g, 1);
    const auto b = vote(stream_tag::b, 1);

    CHECK_THROWS_MATCHES(fuse_majority({r, g}), error,
                         MessageMatches(ContainsSubstring("exactly 3")));
    CHECK_THROWS_MATCHES(fuse_majority({r, g, g}), error,
                         MessageMatches(ContainsSubstring("duplicate G stream")));
    CHECK_THROWS_MATCHES(fuse_majority({r, g, vote(stream_tag::lbp_b, 1)}), error,
                         MessageMatches(ContainsSubstring("only R, G and B")));

    auto short_probs = b;
    short_probs.probabilities = {1.0};
    CHECK_THROWS_MATCHES(fuse_majority({r, g, short_probs}), error,
                         MessageMatches(ContainsSubstring("disagree in length")));

    auto empty_probs = r;
    empty_probs.probabilities.clear();
    CHECK_THROWS_AS(fuse_majority({empty_probs, g, b}), error);
}

TEST_CASE("fusion/rule-names", "[fusion]") {
    CHECK(parse_fusion_rule("majority") == fusion_rule::majority);
    CHECK(parse_fusion_rule("meanprob") == fusion_rule::mean_probability);
    CHECK(std::string(to_string(fusion_rule::majority)) == "majority");
    CHECK(std::string(to_string(fusion_rule::mean_probability)) == "meanprob");
    CHECK_THROWS_AS(parse_fusion_rule("average"), parse_error);
    // fuse() dispatches on the rule
    const std::vector<decision> parts = {
        make_decision(stream_tag::r, 0, {0.99, 0.01}),
        make_decision(stream_tag::g, 1, {0.45, 0.55}),
        make_decision(stream_tag::b, 1, {0.45, 0.55}),
    };
    CHECK(fuse(parts, fusion_rule::majority).label == class_label::glaucoma);
    CHECK(fuse(parts, fusion_rule::mean_probability).label == class_label::normal);
}

// ---------------------------------------------------------------------
// metrics
// ---------------------------------------------------------------------

TEST_CASE("metrics/confusion-and-percentages", "[metrics]") {
    confusion c;
    // 50 glaucoma cases: 40 detected; 50 normal cases: 45 recognized
    c.tp = 40;
    c.fn = 10;
    c.tn = 45;
    c.fp = 5;
    REQUIRE(c.total() == 100);
    const metric_set m = compute_metrics(c);
    CHECK_THAT(m.accuracy, WithinAbs(85.0, 1e-12));
    CHECK_THAT(m.sensitivity, WithinAbs(80.0, 1e-12));
    CHECK_THAT(m.specificity, WithinAbs(90.0, 1e-12));
}

TEST_CASE("metrics/add-routes-counts", "[metrics]") {
    confusion c;
    c.add(class_label::glaucoma, class_label::glaucoma); // tp
    c.add(class_label::glaucoma, class_label::normal);   // fn
    c.add(class_label::normal, class_label::normal);     // tn
    c.add(class_label::normal, class_label::glaucoma);   // fp
    CHECK(c.tp == 1);
    CHECK(c.fn == 1);
    CHECK(c.tn == 1);
    CHECK(c.fp == 1);
    const metric_set m = compute_metrics(c);
    CHECK_THAT(m.accuracy, WithinAbs(50.0, 1e-12));
}

TEST_CASE("metrics/require-both-classes", "[metrics]") {
    confusion no_positives;
    no_positives.tn = 3;
    no_positives.fp = 1;
    CHECK_THROWS_MATCHES(compute_metrics(no_positives), error,
                         MessageMatches(ContainsSubstring("positive")));
    confusion no_negatives;
    no_negatives.tp = 3;
    no_negatives.fn = 1;
    CHECK_THROWS_MATCHES(compute_metrics(no_negatives), error,
                         MessageMatches(ContainsSubstring("negative")));
}

TEST_CASE("metrics/max-mean-min", "[metrics]") {
    const metric_summary s = aggregate_max_mean_min({90.0, 80.0, 85.0});
    CHECK(s.max == 90.0);
    CHECK(s.min == 80.0);
    CHECK_THAT(s.mean, WithinAbs(85.0, 1e-12));
    const metric_summary single = aggregate_max_mean_min({72.5});
    CHECK(single.max == 72.5);
    CHECK(single.mean == 72.5);
    CHECK(single.min == 72.5);
    CHECK_THROWS_AS(aggregate_max_mean_min({}), error);
}

// ---------------------------------------------------------------------
// manifest loading
// ---------------------------------------------------------------------

TEST_CASE("dataset/manifest/parses-and-resolves", "[dataset]") {
    const auto dir = fresh_dir("manifest_ok");
    std::filesystem::create_directories(dir / "sub");
    write_test_image(dir / "img_a.ppm", 10);
    write_test_image(dir / "img_b.ppm", 60);
    write_test_image(dir / "sub" / "img_c.ppm", 110);
    write_file(dir / "manifest.csv",
               "# fixture manifest\n"
               "path,label\n"
               "img_a.ppm,normal\n"
               "img_b.ppm,GLAUCOMA\n"
               "\n"
               "  sub/img_c.ppm ,  Normal \n");

    const auto entries = load_manifest((dir / "manifest.csv").string());
    REQUIRE(entries.size() == 3);
    CHECK(entries[0].label == class_label::normal);
    CHECK(entries[1].label == class_label::glaucoma);
    CHECK(entries[2].label == class_label::normal);
    CHECK(entries[0].path == (dir / "img_a.ppm").string());
    CHECK(entries[2].path == (dir / "sub" / "img_c.ppm").string());

    const auto data = load_dataset(entries);
    REQUIRE(data.size() == 3);
    CHECK(data[0].image.width == 2);
    CHECK(data[0].image.channels == 3);
    CHECK(data[1].label == class_label::glaucoma);
    CHECK(data[2].id == entries[2].path);
    std::filesystem::remove_all(dir);
}

TEST_CASE("dataset/manifest/absolute-paths-kept", "[dataset]") {
    const auto dir = fresh_dir("manifest_abs");
    write_test_image(dir / "img.ppm", 5);
    const std::string abs = (dir / "img.ppm").string();
    write_file(dir / "manifest.csv", abs + ",glaucoma\n");
    const auto entries = load_manifest((dir / "manifest.csv").string());
    REQUIRE(entries.size() == 1);
    CHECK(entries[0].path == abs);
    std::filesystem::remove_all(dir);
}

TEST_CASE("dataset/manifest/errors", "[dataset]") {
    const auto dir = fresh_dir("manifest_bad");
    const auto path = dir / "manifest.csv";
    const std::string name = path.string();

    write_file(path, "img.ppm,normal\nimg.ppm,glaucoma\n");
    CHECK_THROWS_MATCHES(load_manifest(name), parse_error,
                         MessageMatches(ContainsSubstring(":2: duplicate image path 'img.ppm'")));

    write_file(path, "just-a-path-no-comma\n");
    CHECK_THROWS_MATCHES(load_manifest(name), parse_error,
                         MessageMatches(ContainsSubstring("expected 'path,label'")));

    write_file(path, ",normal\n");
    CHECK_THROWS_MATCHES(load_manifest(name), parse_error,
                         MessageMatches(ContainsSubstring("empty image path")));

    write_file(path, "a.ppm,normal\nb.ppm,suspicious\n");
    CHECK_THROWS_MATCHES(load_manifest(name), parse_error,
                         MessageMatches(ContainsSubstring(":2:")));

    write_file(path, "# only comments\n\n");
    CHECK_THROWS_MATCHES(load_manifest(name), parse_error,
                         MessageMatches(ContainsSubstring("lists no images")));

    CHECK_THROWS_AS(load_manifest((dir / "missing.csv").string()), io_error);

    write_file(path, "ghost.ppm,normal\n");
    CHECK_THROWS_AS(load_dataset(load_manifest(name)), io_error);
    std::filesystem::remove_all(dir);
}

// ---------------------------------------------------------------------
// stratified split
// ---------------------------------------------------------------------

TEST_CASE("dataset/split/stratified-counts", "[dataset]") {
    std::vector<class_label> labels;
    for (int i = 0; i < 10; ++i) labels.push_back(class_label::normal);
    for (int i = 0; i < 6; ++i) labels.push_back(class_label::glaucoma);

    const split_indices split = stratified_split(labels, 0.2, 1);
    CHECK(split.test.size() == 3);  // round(10*0.2) + round(6*0.2) = 2 + 1
    CHECK(split.train.size() == 13);

    // disjoint and complete
    std::vector<std::size_t> all = split.train;
    all.insert(all.end(), split.test.begin(), split.test.end());
    std::sort(all.begin(), all.end());
    for (std::size_t i = 0; i < all.size(); ++i) REQUIRE(all[i] == i);

    // per-class composition of the test share
    std::size_t test_normal = 0;
    for (const std::size_t i : split.test) {
        test_normal += labels[i] == class_label::normal ? 1 : 0;
    }
    CHECK(test_normal == 2);
}

TEST_CASE("dataset/split/rounds-half-away-from-zero", "[dataset]") {
    const std::vector<class_label> labels = {
        class_label::normal, class_label::normal, class_label::normal,
        class_label::glaucoma, class_label::glaucoma, class_label::glaucoma};
    const split_indices split = stratified_split(labels, 0.5, 7);
    // 3 * 0.5 rounds to 2 test images per class
    CHECK(split.test.size() == 4);
    CHECK(split.train.size() == 2);
}

TEST_CASE("dataset/split/deterministic", "[dataset]") {
    std::vector<class_label> labels;
    for (int i = 0; i < 20; ++i) {
        labels.push_back(i % 2 == 0 ? class_label::normal : class_label::glaucoma);
    }
    const split_indices a = stratified_split(labels, 0.2, 42);
    const split_indices b = stratified_split(labels, 0.2, 42);
    CHECK(a.test == b.test);
    CHECK(a.train == b.train);
    const split_indices c = stratified_split(labels, 0.2, 43);
    CHECK_FALSE(a.test == c.test);
}

TEST_CASE("dataset/split/errors", "[dataset]") {
    std::vector<class_label> labels(10, class_label::normal);
    CHECK_THROWS_MATCHES(stratified_split(labels, 0.2, 0), error,
                         MessageMatches(ContainsSubstring("no glaucoma examples")));
    labels[0] = class_label::glaucoma;
    // round(1 * 0.2) = 0 test glaucoma images
    CHECK_THROWS_MATCHES(stratified_split(labels, 0.2, 0), error,
                         MessageMatches(ContainsSubstring("glaucoma")));
    CHECK_THROWS_AS(stratified_split(labels, 0.0, 0), error);
    CHECK_THROWS_AS(stratified_split(labels, 1.0, 0), error);
}

// ---------------------------------------------------------------------
// synthetic dataset generator
// ---------------------------------------------------------------------

namespace {

double mean_intensity(const image_u8& img) {
    double sum = 0.0;
    for (const std::uint8_t p : img.data) sum += p;
    return sum / static_cast<double>(img.data.size());
}

/// Mean absolute horizontal first difference of the first channel:
/// small for smooth images, large for pixel checkerboards.
double roughness(const image_u8& img) {
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t y = 0; y < img.height; ++y) {
        for (std::size_t x = 0; x + 1 < img.width; ++x) {
            sum += std::abs(static_cast<double>(img.at(x + 1, y, 0)) -
                            static_cast<double>(img.at(x, y, 0)));
            ++count;
        }
    }
    return sum / static_cast<double>(count);
}

} // namespace

TEST_CASE("dataset/synthetic/classes-differ-in-texture-not-brightness", "[dataset][synth]") {
    const auto dir = fresh_dir("synth_props");
    synth_config cfg;
    cfg.per_class = 6;
    cfg.width = 32;
    cfg.height = 32;
    cfg.seed = 42;
    cfg.out_dir = dir.string();
    const std::string manifest = generate_synthetic_dataset(cfg);
    CHECK(manifest == (dir / "manifest.csv").string());

    const auto data = load_dataset(load_manifest(manifest));
    REQUIRE(data.size() == 12);
    for (const auto& d : data) {
        CAPTURE(d.id);
        REQUIRE(d.image.width == 32);
        REQUIRE(d.image.height == 32);
        REQUIRE(d.image.channels == 3);
        // both classes share the same mean brightness...
        CHECK_THAT(mean_intensity(d.image), WithinAbs(128.0, 4.0));
        // ...and differ sharply in local texture
        if (d.label == class_label::normal) {
            CHECK(roughness(d.image) < 25.0);
        } else {
            CHECK(roughness(d.image) > 35.0);
        }
    }
    std::filesystem::remove_all(dir);
}

TEST_CASE("dataset/synthetic/deterministic", "[dataset][synth]") {
    const auto dir_a = fresh_dir("synth_det_a");
    const auto dir_b = fresh_dir("synth_det_b");
    const auto dir_c = fresh_dir("synth_det_c");
    synth_config cfg;
    cfg.per_class = 2;
    cfg.width = 16;
    cfg.height = 16;
    cfg.seed = 9;

    cfg.out_dir = dir_a.string();
    generate_synthetic_dataset(cfg);
    cfg.out_dir = dir_b.string();
    generate_synthetic_dataset(cfg);
    cfg.out_dir = dir_c.string();
    cfg.seed = 10;
    generate_synthetic_dataset(cfg);

    for (const char* name : {"normal_000.ppm", "normal_001.ppm", "glaucoma_000.ppm",
                             "glaucoma_001.ppm", "manifest.csv"}) {
        CAPTURE(name);
        CHECK(read_file(dir_a / name) == read_file(dir_b / name));
    }
    CHECK_FALSE(read_file(dir_a / "normal_000.ppm") == read_file(dir_c / "normal_000.ppm"));
    std::filesystem::remove_all(dir_a);
    std::filesystem::remove_all(dir_b);
    std::filesystem::remove_all(dir_c);
}

TEST_CASE("dataset/synthetic/validation", "[dataset][synth]") {
    synth_config cfg;
    cfg.per_class = 0;
    CHECK_THROWS_AS(generate_synthetic_dataset(cfg), error);
    cfg.per_class = 1;
    cfg.width = 2;
    CHECK_THROWS_AS(generate_synthetic_dataset(cfg), error);
}

// ---------------------------------------------------------------------
// split specification
// ---------------------------------------------------------------------

TEST_CASE("experiment/split-spec", "[experiment]") {
    const split_spec s = parse_split_spec("70:30");
    CHECK(s.train_pct == 70);
    CHECK(s.test_pct == 30);
    CHECK(s.name() == "70:30");
    CHECK(s.file_tag() == "70_30");
    CHECK_THAT(s.test_fraction(), WithinAbs(0.3, 1e-12));

    CHECK_THROWS_AS(parse_split_spec("80"), parse_error);
    CHECK_THROWS_AS(parse_split_spec("80:21"), parse_error);
    CHECK_THROWS_AS(parse_split_spec("0:100"), parse_error);
    CHECK_THROWS_AS(parse_split_spec("80:20x"), parse_error);
    CHECK_THROWS_AS(parse_split_spec("abc:def"), parse_error);
    CHECK_THROWS_AS(parse_split_spec("-10:110"), parse_error);
}

// ---------------------------------------------------------------------
// full experiments on a small synthetic dataset
// ---------------------------------------------------------------------

namespace {

std::string make_experiment_dataset(const std::filesystem::path& dir) {
    synth_config scfg;
    scfg.per_class = 6;
    scfg.width = 32;
    scfg.height = 32;
    scfg.seed = 11;
    scfg.out_dir = dir.string();
    return generate_synthetic_dataset(scfg);
}

experiment_config small_experiment(const std::string& manifest) {
    experiment_config cfg;
    cfg.manifest_path = manifest;
    cfg.arch = make_tiny_config(2);
    cfg.split = {80, 20};
    cfg.reps = 2;
    cfg.learning_rate = 0.001;
    cfg.momentum = 0.9;
    cfg.batch_size = 16;
    cfg.epochs = 2;
    cfg.fusion = fusion_rule::majority;
    cfg.lbp_augment = true;
    cfg.seed = 5;
    cfg.jobs = 1;
    return cfg;
}

} // namespace

TEST_CASE("experiment/run/shape-and-augmentation", "[experiment][slow]") {
    const auto dir = fresh_dir("exp_shape");
    const auto cfg = small_experiment(make_experiment_dataset(dir));

    const experiment_result result = run_experiment(cfg);
    REQUIRE(result.reps.size() == 2);
    CHECK(result.reps[0].rep == 1);
    CHECK(result.reps[1].rep == 2);
    for (const auto& rep : result.reps) {
        // 5 train images per class, 6 planes each (3 channels + 3 texture maps)
        CHECK(rep.train_samples == 60);
        for (const auto& stream : rep.streams) {
            CHECK(stream.counts.total() == 2); // 1 test image per class
        }
    }
    for (std::size_t s = 0; s < 4; ++s) {
        for (std::size_t m = 0; m < 3; ++m) {
            const metric_summary& sum = result.summary[s][m];
            CHECK(sum.max >= sum.mean);
            CHECK(sum.mean >= sum.min);
        }
    }

    experiment_config no_lbp = cfg;
    no_lbp.lbp_augment = false;
    const experiment_result thin = run_experiment(no_lbp);
    for (const auto& rep : thin.reps) {
        CHECK(rep.train_samples == 30); // exactly half without the texture planes
    }
    std::filesystem::remove_all(dir);
}

TEST_CASE("experiment/run/deterministic-and-jobs-independent", "[experiment][slow]") {
    const auto dir = fresh_dir("exp_det");
    const auto cfg = small_experiment(make_experiment_dataset(dir));

    const auto out_a = fresh_dir("exp_det_out_a");
    const auto out_b = fresh_dir("exp_det_out_b");
    const auto out_c = fresh_dir("exp_det_out_c");

    const experiment_result ra = run_experiment(cfg);
    write_experiment_outputs(cfg, ra, out_a.string());

    const experiment_result rb = run_experiment(cfg); // identical re-run
    write_experiment_outputs(cfg, rb, out_b.string());

    experiment_config threaded = cfg;
    threaded.jobs = 2; // worker threads must not change any result
    const experiment_result rc = run_experiment(threaded);
    write_experiment_outputs(threaded, rc, out_c.string());

    for (const char* name : {"report_80_20.csv", "reps_80_20.csv", "run_config.txt"}) {
        CAPTURE(name);
        const std::string a = read_file(out_a / name);
        CHECK(a == read_file(out_b / name));
        CHECK(a == read_file(out_c / name));
    }
    std::filesystem::remove_all(dir);
    std::filesystem::remove_all(out_a);
    std::filesystem::remove_all(out_b);
    std::filesystem::remove_all(out_c);
}

TEST_CASE("experiment/outputs/report-format", "[experiment][slow]") {
    const auto dir = fresh_dir("exp_report");
    const auto out = fresh_dir("exp_report_out");
    const auto cfg = small_experiment(make_experiment_dataset(dir));
    const experiment_result result = run_experiment(cfg);
    const experiment_paths paths = write_experiment_outputs(cfg, result, out.string());

    // report: header + 4 streams x 3 metrics
    std::istringstream report(read_file(paths.report));
    std::string line;
    REQUIRE(std::getline(report, line));
    CHECK(line == "split,stream,metric,max,mean,min");
    std::vector<std::string> rows;
    while (std::getline(report, line)) {
        if (!line.empty()) rows.push_back(line);
    }
    REQUIRE(rows.size() == 12);
    CHECK_THAT(rows[0], ContainsSubstring("80:20,R,accuracy,"));
    CHECK_THAT(rows[11], ContainsSubstring("80:20,fused,specificity,"));
    for (const auto& row : rows) {
        // two-decimal percentages: every numeric field has a dot
        CHECK(std::count(row.begin(), row.end(), ',') == 5);
        CHECK(std::count(row.begin(), row.end(), '.') == 3);
    }

    // per-repetition file: header + 2 reps x 4 streams
    std::istringstream reps(read_file(paths.reps));
    REQUIRE(std::getline(reps, line));
    CHECK(line == "split,rep,stream,tp,fp,tn,fn,accuracy,sensitivity,specificity,train_samples");
    rows.clear();
    while (std::getline(reps, line)) {
        if (!line.empty()) rows.push_back(line);
    }
    REQUIRE(rows.size() == 8);
    CHECK_THAT(rows[0], ContainsSubstring("80:20,1,R,"));
    CHECK_THAT(rows[7], ContainsSubstring("80:20,2,fused,"));

    // run configuration echo
    const std::string run_cfg = read_file(paths.run_config);
    CHECK_THAT(run_cfg, ContainsSubstring("split=80:20\n"));
    CHECK_THAT(run_cfg, ContainsSubstring("reps=2\n"));
    CHECK_THAT(run_cfg, ContainsSubstring("epochs=2\n"));
    CHECK_THAT(run_cfg, ContainsSubstring("fusion=majority\n"));
    CHECK_THAT(run_cfg, ContainsSubstring("lbp_augment=true\n"));
    CHECK_THAT(run_cfg, ContainsSubstring("[architecture]\n"));
    CHECK_THAT(run_cfg, ContainsSubstring("conv1 conv"));
    // thread count is an execution detail, not part of the experiment
    CHECK_THAT(run_cfg, !ContainsSubstring("jobs"));

    // the reps file carries everything needed to rebuild the report
    const reps_table table = load_reps_csv(paths.reps);
    CHECK(table.split_name == "80:20");
    std::ostringstream regenerated;
    write_report_csv(regenerated, table.split_name, table.result);
    CHECK(regenerated.str() == read_file(paths.report));

    std::filesystem::remove_all(dir);
    std::filesystem::remove_all(out);
}

TEST_CASE("experiment/reps-csv/parse-errors", "[experiment]") {
    const auto parse = [](const std::string& text) {
        std::istringstream in(text);
        return read_reps_csv(in, "reps.csv");
    };
    CHECK_THROWS_MATCHES(parse("wrong,header\n"), parse_error,
                         MessageMatches(ContainsSubstring("header")));
    const std::string header =
        "split,rep,stream,tp,fp,tn,fn,accuracy,sensitivity,specificity,train_samples\n";
    CHECK_THROWS_MATCHES(parse(header), parse_error,
                         MessageMatches(ContainsSubstring("no repetition rows")));
    CHECK_THROWS_MATCHES(parse(header + "80:20,1,R,1,0,1\n"), parse_error,
                         MessageMatches(ContainsSubstring("expected 11 fields")));
    CHECK_THROWS_MATCHES(parse(header + "80:20,1,X,1,0,1,0,100,100,100,60\n"), parse_error,
                         MessageMatches(ContainsSubstring("unknown stream 'X'")));
    CHECK_THROWS_MATCHES(parse(header + "80:20,0,R,1,0,1,0,100,100,100,60\n"), parse_error,
                         MessageMatches(ContainsSubstring("1-based")));
    CHECK_THROWS_MATCHES(parse(header + "80:20,1,R,x,0,1,0,100,100,100,60\n"), parse_error,
                         MessageMatches(ContainsSubstring("bad confusion counts")));
    // a repetition missing one of its four stream rows is rejected
    const std::string row = "80:20,1,R,1,0,1,0,100.00,100.00,100.00,60\n";
    CHECK_THROWS_MATCHES(parse(header + row), parse_error,
                         MessageMatches(ContainsSubstring("missing its G row")));
    CHECK_THROWS_MATCHES(
        parse(header + row + "30:70,1,G,1,0,1,0,100.00,100.00,100.00,60\n"), parse_error,
        MessageMatches(ContainsSubstring("mixed split names")));
}

TEST_CASE("experiment/run/validation", "[experiment]") {
    experiment_config cfg;
    cfg.manifest_path = "/nonexistent/manifest.csv";
    cfg.arch = make_tiny_config(2);
    cfg.reps = 0;
    CHECK_THROWS_MATCHES(run_experiment(cfg), error,
                         MessageMatches(ContainsSubstring("at least one repetition")));
    cfg.reps = 1;
    CHECK_THROWS_AS(run_experiment(cfg), io_error);
}
