//=======================================================================
// Copyright (c) 2026 the glaucnet authors
// Distributed under the terms of the MIT License.
// (See accompanying file LICENSE or copy at
//  http://opensource.org/licenses/MIT)
//=======================================================================

#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "glaucnet/augment.hpp"
#include "glaucnet/dataset.hpp"
#include "glaucnet/error.hpp"
#include "glaucnet/fusion.hpp"
#include "glaucnet/metrics.hpp"
#include "glaucnet/model.hpp"
#include "glaucnet/train.hpp"

namespace glaucnet {

// ---------------------------------------------------------------------
// Split specification, e.g. "80:20" (train:test percentages)
// ---------------------------------------------------------------------

struct split_spec {
    int train_pct = 80;
    int test_pct = 20;

    double test_fraction() const { return static_cast<double>(test_pct) / 100.0; }
    std::string name() const {
        return std::to_string(train_pct) + ":" + std::to_string(test_pct);
    }
    std::string file_tag() const {
        return std::to_string(train_pct) + "_" + std::to_string(test_pct);
    }
};

inline split_spec parse_split_spec(const std::string& s) {
    const auto colon = s.find(':');
    if (colon == std::string::npos) {
        throw parse_error("split must look like '80:20', got '" + s + "'");
    }
    split_spec spec;
    try {
        std::size_t p1 = 0, p2 = 0;
        spec.train_pct = std::stoi(s.substr(0, colon), &p1);
        spec.test_pct = std::stoi(s.substr(colon + 1), &p2);
        if (p1 != colon || p2 != s.size() - colon - 1) throw std::invalid_argument(s);
    } catch (const std::exception&) {
        throw parse_error("split must look like '80:20', got '" + s + "'");
    }
    if (spec.train_pct <= 0 || spec.test_pct <= 0 || spec.train_pct + spec.test_pct != 100) {
        throw parse_error("split percentages must be positive and sum to 100, got '" + s + "'");
    }
    return spec;
}

// ---------------------------------------------------------------------
// Experiment configuration and per-repetition results
// ---------------------------------------------------------------------

struct experiment_config {
    std::string manifest_path;
    model_config arch;
    split_spec split{80, 20};
    std::size_t reps = 5;
    double learning_rate = 0.0001;
    double momentum = 0.9;
    std::size_t batch_size = 20;
    std::size_t epochs = 80;
    fusion_rule fusion = fusion_rule::majority;
    bool lbp_augment = true;
    std::uint64_t seed = 0;
    std::size_t jobs = 1;
};

inline constexpr std::array<const char*, 4> result_stream_names = {"R", "G", "B", "fused"};
inline constexpr std::array<const char*, 3> result_metric_names = {"accuracy", "sensitivity",
                                                                   "specificity"};

inline double metric_by_index(const metric_set& m, std::size_t i) {
    return i == 0 ? m.accuracy : (i == 1 ? m.sensitivity : m.specificity);
}

struct stream_result {
    confusion counts;
    metric_set metrics;
};

struct rep_result {
    std::size_t rep = 0; // 1-based
    std::size_t train_samples = 0;
    std::array<stream_result, 4> streams; // R, G, B, fused
};

struct experiment_result {
    std::vector<rep_result> reps;
    std::array<std::array<metric_summary, 3>, 4> summary{}; // [stream][metric]
};

inline void aggregate_experiment(experiment_result& result) {
    for (std::size_t s = 0; s < 4; ++s) {
        for (std::size_t m = 0; m < 3; ++m) {
            std::vector<double> values;
            values.reserve(result.reps.size());
            for (const auto& rep : result.reps) {
                values.push_back(metric_by_index(rep.streams[s].metrics, m));
            }
            result.summary[s][m] = aggregate_max_mean_min(values);
        }
    }
}

// ---------------------------------------------------------------------
// Running an experiment. Every repetition derives its own seeds from the
// master seed, so repetitions are independent and the run order (or the
// number of worker threads) cannot change any result.
// ---------------------------------------------------------------------

inline rep_result run_repetition(const experiment_config& cfg,
                                 const std::vector<dataset_entry>& data, std::size_t rep_index) {
    const std::uint64_t rep_seed = mix_seed(cfg.seed, rep_index);
    const std::uint64_t split_seed = mix_seed(rep_seed, 1);
    const std::uint64_t init_seed = mix_seed(rep_seed, 2);
    const std::uint64_t train_seed = mix_seed(rep_seed, 3);

    std::vector<class_label> labels;
    labels.reserve(data.size());
    for (const auto& d : data) labels.push_back(d.label);
    const split_indices split = stratified_split(labels, cfg.split.test_fraction(), split_seed);

    const std::size_t input_size = cfg.arch.input_size;
    std::vector<sample> train_set;
    train_set.reserve(split.train.size() * (cfg.lbp_augment ? 6 : 3));
    for (const std::size_t idx : split.train) {
        const auto& d = data[idx];
        auto samples = cfg.lbp_augment ? augment_training_image(d.image, d.label, input_size, d.id)
                                       : prepare_test_image(d.image, d.label, input_size, d.id);
        for (auto& s : samples) train_set.push_back(std::move(s));
    }

    network<float> net(cfg.arch, init_seed);
    train_config tc;
    tc.learning_rate = cfg.learning_rate;
    tc.momentum = cfg.momentum;
    tc.batch_size = cfg.batch_size;
    tc.epochs = cfg.epochs;
    tc.seed = train_seed;
    train(net, train_set, tc);

    rep_result rep;
    rep.rep = rep_index + 1;
    rep.train_samples = train_set.size();
    for (const std::size_t idx : split.test) {
        const auto& d = data[idx];
        const auto channel_samples = prepare_test_image(d.image, d.label, input_size, d.id);
        std::vector<decision> parts;
        parts.reserve(3);
        for (const auto& s : channel_samples) {
            const tensor_f probs = net.predict(s.input);
            decision dec;
            dec.stream = s.stream;
            dec.probabilities.assign(probs.data(), probs.data() + probs.size());
            dec.label = static_cast<class_label>(argmax_low_tie(dec.probabilities));
            rep.streams[static_cast<std::size_t>(s.stream)].counts.add(d.label, dec.label);
            parts.push_back(std::move(dec));
        }
        const fused_decision fused = fuse(parts, cfg.fusion);
        rep.streams[3].counts.add(d.label, fused.label);
    }
    for (auto& stream : rep.streams) {
        stream.metrics = compute_metrics(stream.counts);
    }
    return rep;
}

inline experiment_result run_experiment(const experiment_config& cfg) {
    if (cfg.reps == 0) throw error("experiment needs at least one repetition");
    const auto entries = load_manifest(cfg.manifest_path);
    const auto data = load_dataset(entries);

    experiment_result result;
    result.reps.resize(cfg.reps);
    const std::size_t workers = std::min(cfg.jobs > 0 ? cfg.jobs : 1, cfg.reps);
    if (workers <= 1) {
        for (std::size_t r = 0; r < cfg.reps; ++r) {
            result.reps[r] = run_repetition(cfg, data, r);
        }
    } else {
        std::atomic<std::size_t> next{0};
        std::atomic<bool> failed{false};
        std::string first_error;
        std::mutex error_mutex;
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (;;) {
                    const std::size_t r = next.fetch_add(1);
                    if (r >= cfg.reps || failed.load()) return;
                    try {
                        result.reps[r] = run_repetition(cfg, data, r);
                    } catch (const std::exception& e) {
                        std::lock_guard<std::mutex> lock(error_mutex);
                        if (!failed.exchange(true)) first_error = e.what();
                        return;
                    }
                }
            });
        }
        for (auto& t : pool) t.join();
        if (failed.load()) throw error("repetition failed: " + first_error);
    }
    aggregate_experiment(result);
    return result;
}

// ---------------------------------------------------------------------
// Report files. Both CSVs are pure functions of the results, with fixed
// two-decimal percentages, so a re-run with the same seed reproduces
// them byte for byte.
// ---------------------------------------------------------------------

namespace detail {

inline std::string format_pct(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

} // namespace detail

inline void write_report_csv(std::ostream& out, const std::string& split_name,
                             const experiment_result& result) {
    out << "split,stream,metric,max,mean,min\n";
    for (std::size_t s = 0; s < 4; ++s) {
        for (std::size_t m = 0; m < 3; ++m) {
            const metric_summary& sum = result.summary[s][m];
            out << split_name << ',' << result_stream_names[s] << ',' << result_metric_names[m]
                << ',' << detail::format_pct(sum.max) << ',' << detail::format_pct(sum.mean) << ','
                << detail::format_pct(sum.min) << '\n';
        }
    }
}

inline void write_reps_csv(std::ostream& out, const std::string& split_name,
                           const experiment_result& result) {
    out << "split,rep,stream,tp,fp,tn,fn,accuracy,sensitivity,specificity,train_samples\n";
    for (const auto& rep : result.reps) {
        for (std::size_t s = 0; s < 4; ++s) {
            const stream_result& sr = rep.streams[s];
            out << split_name << ',' << rep.rep << ',' << result_stream_names[s] << ','
                << sr.counts.tp << ',' << sr.counts.fp << ',' << sr.counts.tn << ','
                << sr.counts.fn << ',' << detail::format_pct(sr.metrics.accuracy) << ','
                << detail::format_pct(sr.metrics.sensitivity) << ','
                << detail::format_pct(sr.metrics.specificity) << ',' << rep.train_samples << '\n';
        }
    }
}

inline void write_run_config(std::ostream& out, const experiment_config& cfg) {
    out << "manifest=" << cfg.manifest_path << '\n'
        << "split=" << cfg.split.name() << '\n'
        << "reps=" << cfg.reps << '\n'
        << "lr=" << cfg.learning_rate << '\n'
        << "momentum=" << cfg.momentum << '\n'
        << "batch=" << cfg.batch_size << '\n'
        << "epochs=" << cfg.epochs << '\n'
        << "fusion=" << to_string(cfg.fusion) << '\n'
        << "lbp_augment=" << (cfg.lbp_augment ? "true" : "false") << '\n'
        << "seed=" << cfg.seed << '\n'
        << "[architecture]\n"
        << serialize_model_config(cfg.arch);
}

struct experiment_paths {
    std::string report;
    std::string reps;
    std::string run_config;
};

inline experiment_paths write_experiment_outputs(const experiment_config& cfg,
                                                 const experiment_result& result,
                                                 const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    const std::filesystem::path dir(out_dir);
    experiment_paths paths;
    paths.report = (dir / ("report_" + cfg.split.file_tag() + ".csv")).string();
    paths.reps = (dir / ("reps_" + cfg.split.file_tag() + ".csv")).string();
    paths.run_config = (dir / "run_config.txt").string();

    const std::string split_name = cfg.split.name();
    {
        std::ofstream out(paths.report, std::ios::binary);
        if (!out) throw io_error("cannot write '" + paths.report + "'");
        write_report_csv(out, split_name, result);
    }
    {
        std::ofstream out(paths.reps, std::ios::binary);
        if (!out) throw io_error("cannot write '" + paths.reps + "'");
        write_reps_csv(out, split_name, result);
    }
    {
        std::ofstream out(paths.run_config, std::ios::binary);
        if (!out) throw io_error("cannot write '" + paths.run_config + "'");
        write_run_config(out, cfg);
    }
    return paths;
}

// ---------------------------------------------------------------------
// Re-aggregation: rebuild the summary report from a per-repetition CSV.
// Metrics are recomputed from the stored confusion counts, so the
// regenerated report matches the original byte for byte.
// ---------------------------------------------------------------------

struct reps_table {
    std::string split_name;
    experiment_result result;
};

inline reps_table read_reps_csv(std::istream& in, const std::string& source_name) {
    std::string line;
    if (!std::getline(in, line) ||
        detail::trim(line) != "split,rep,stream,tp,fp,tn,fn,accuracy,sensitivity,specificity,"
                              "train_samples") {
        throw parse_error(source_name + ": missing per-repetition CSV header");
    }
    reps_table table;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string text = detail::trim(line);
        if (text.empty()) continue;
        std::vector<std::string> fields;
        std::size_t start = 0;
        for (;;) {
            const auto comma = text.find(',', start);
            if (comma == std::string::npos) {
                fields.push_back(text.substr(start));
                break;
            }
            fields.push_back(text.substr(start, comma - start));
            start = comma + 1;
        }
        if (fields.size() != 11) {
            throw parse_error(source_name + ":" + std::to_string(line_no) + ": expected 11 fields, got " +
                              std::to_string(fields.size()));
        }
        const auto fail = [&](const std::string& what) -> parse_error {
            return parse_error(source_name + ":" + std::to_string(line_no) + ": " + what);
        };
        if (table.split_name.empty()) {
            table.split_name = fields[0];
        } else if (table.split_name != fields[0]) {
            throw fail("mixed split names '" + table.split_name + "' and '" + fields[0] + "'");
        }
        std::size_t rep_no = 0, stream_idx = 4;
        try {
            rep_no = static_cast<std::size_t>(std::stoull(fields[1]));
        } catch (const std::exception&) {
            throw fail("bad repetition index '" + fields[1] + "'");
        }
        if (rep_no == 0) throw fail("repetition indices are 1-based");
        for (std::size_t s = 0; s < 4; ++s) {
            if (fields[2] == result_stream_names[s]) stream_idx = s;
        }
        if (stream_idx == 4) throw fail("unknown stream '" + fields[2] + "'");
        confusion c;
        std::size_t train_samples = 0;
        try {
            c.tp = static_cast<std::size_t>(std::stoull(fields[3]));
            c.fp = static_cast<std::size_t>(std::stoull(fields[4]));
            c.tn = static_cast<std::size_t>(std::stoull(fields[5]));
            c.fn = static_cast<std::size_t>(std::stoull(fields[6]));
            train_samples = static_cast<std::size_t>(std::stoull(fields[10]));
        } catch (const std::exception&) {
            throw fail("bad confusion counts");
        }
        if (table.result.reps.size() < rep_no) table.result.reps.resize(rep_no);
        rep_result& rep = table.result.reps[rep_no - 1];
        rep.rep = rep_no;
        rep.train_samples = train_samples;
        rep.streams[stream_idx].counts = c;
        rep.streams[stream_idx].metrics = compute_metrics(c);
    }
    if (table.result.reps.empty()) {
        throw parse_error(source_name + ": no repetition rows");
    }
    for (const auto& rep : table.result.reps) {
        if (rep.rep == 0) {
            throw parse_error(source_name + ": repetition indices are not contiguous");
        }
        for (std::size_t s = 0; s < 4; ++s) {
            if (rep.streams[s].counts.total() == 0) {
                throw parse_error(source_name + ": repetition " + std::to_string(rep.rep) +
                                  " is missing its " + result_stream_names[s] + " row");
            }
        }
    }
    aggregate_experiment(table.result);
    return table;
}

inline reps_table load_reps_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open '" + path + "'");
    return read_reps_csv(in, path);
}

} // namespace glaucnet
