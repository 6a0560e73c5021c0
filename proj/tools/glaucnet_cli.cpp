//=======================================================================
// Copyright (c) 2026 the glaucnet authors
// Distributed under the terms of the MIT License.
// (See accompanying file LICENSE or copy at
//  http://opensource.org/licenses/MIT)
//=======================================================================

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "glaucnet/glaucnet.hpp"

namespace {

using namespace glaucnet;

struct arch_options {
    std::string preset = "tiny";
    std::string arch_file;

    model_config resolve(std::size_t class_count = 2) const {
        if (!arch_file.empty()) return load_model_config(arch_file);
        if (preset == "tiny") return make_tiny_config(class_count);
        if (preset == "alexnet") return make_alexnet_config(class_count);
        throw parse_error("unknown preset '" + preset + "' (expected tiny or alexnet)");
    }
};

void add_arch_options(CLI::App* cmd, arch_options& opts) {
    auto* preset = cmd->add_option("--preset", opts.preset, "Built-in architecture: tiny or alexnet");
    auto* arch = cmd->add_option("--arch", opts.arch_file, "Architecture description file");
    preset->excludes(arch);
    arch->excludes(preset);
}

std::vector<sample> collect_training_samples(const std::vector<dataset_entry>& data,
                                             std::size_t input_size, bool lbp_augment) {
    std::vector<sample> out;
    out.reserve(data.size() * (lbp_augment ? 6 : 3));
    for (const auto& d : data) {
        auto samples = lbp_augment ? augment_training_image(d.image, d.label, input_size, d.id)
                                   : prepare_test_image(d.image, d.label, input_size, d.id);
        for (auto& s : samples) out.push_back(std::move(s));
    }
    return out;
}

int run_synth(const synth_config& cfg) {
    const std::string manifest = generate_synthetic_dataset(cfg);
    std::cout << manifest << "\n";
    return 0;
}

int run_augment(const std::string& image_path, const std::string& out_dir) {
    const image_u8 img = load_pnm(image_path);
    std::filesystem::create_directories(out_dir);
    const std::filesystem::path dir(out_dir);
    const auto [r, g, b] = split_channels(img);
    const std::pair<const char*, const image_u8*> planes[] = {
        {"r.pgm", &r}, {"g.pgm", &g}, {"b.pgm", &b}};
    lbp_config lbp;
    for (const auto& [name, plane] : planes) {
        save_pnm(*plane, (dir / name).string());
        const image_u8 coded = lbp_image(*plane, lbp);
        save_pnm(coded, (dir / (std::string("lbp_") + name)).string());
    }
    std::cout << out_dir << "\n";
    return 0;
}

int run_train(const std::string& manifest_path, const arch_options& arch, double lr,
              double momentum, std::size_t batch, std::size_t epochs, std::uint64_t seed,
              bool lbp_augment, const std::string& weights_out) {
    const model_config cfg = arch.resolve();
    const auto data = load_dataset(load_manifest(manifest_path));
    const auto samples = collect_training_samples(data, cfg.input_size, lbp_augment);

    network<float> net(cfg, mix_seed(seed, 1));
    train_config tc;
    tc.learning_rate = lr;
    tc.momentum = momentum;
    tc.batch_size = batch;
    tc.epochs = epochs;
    tc.seed = mix_seed(seed, 2);
    const train_result result = train(net, samples, tc);
    net.save_weights(weights_out);
    std::cout << "trained " << result.epochs_run << " epochs on " << samples.size()
              << " samples, final loss " << result.epoch_losses.back() << "\n"
              << weights_out << "\n";
    return 0;
}

int run_eval(const std::string& manifest_path, const arch_options& arch,
             const std::string& weights_path, fusion_rule rule) {
    const model_config cfg = arch.resolve();
    network<float> net(cfg, 0);
    net.load_weights(weights_path);
    const auto data = load_dataset(load_manifest(manifest_path));

    std::array<confusion, 4> counts;
    for (const auto& d : data) {
        std::vector<decision> parts;
        for (const auto& s : prepare_test_image(d.image, d.label, cfg.input_size, d.id)) {
            const tensor_f probs = net.predict(s.input);
            decision dec;
            dec.stream = s.stream;
            dec.probabilities.assign(probs.data(), probs.data() + probs.size());
            dec.label = static_cast<class_label>(argmax_low_tie(dec.probabilities));
            counts[static_cast<std::size_t>(s.stream)].add(d.label, dec.label);
            parts.push_back(std::move(dec));
        }
        counts[3].add(d.label, fuse(parts, rule).label);
    }
    std::cout << "stream,accuracy,sensitivity,specificity\n";
    for (std::size_t s = 0; s < 4; ++s) {
        const metric_set m = compute_metrics(counts[s]);
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.2f,%.2f,%.2f", m.accuracy, m.sensitivity,
                      m.specificity);
        std::cout << result_stream_names[s] << ',' << buf << "\n";
    }
    return 0;
}

// ---- experiment settings: flags + optional key=value config file ----

struct experiment_cli {
    std::string config_path;
    std::string manifest;
    std::string split = "80:20";
    std::string fusion = "majority";
    std::string out = "results";
    arch_options arch;
    std::size_t reps = 5;
    std::size_t batch = 20;
    std::size_t epochs = 80;
    std::size_t jobs = 1;
    double lr = 0.0001;
    double momentum = 0.9;
    std::uint64_t seed = 0;
    bool no_lbp = false;
};

std::uint64_t config_uint(const std::string& value, const std::string& where) {
    std::size_t used = 0;
    unsigned long long parsed = 0;
    if (!value.empty() && value.front() != '-') {
        try {
            parsed = std::stoull(value, &used);
        } catch (const std::exception&) {
            used = 0;
        }
    }
    if (value.empty() || used != value.size()) {
        throw parse_error(where + ": expected a non-negative integer, got '" + value + "'");
    }
    return parsed;
}

double config_real(const std::string& value, const std::string& where) {
    std::size_t used = 0;
    double parsed = 0.0;
    try {
        parsed = std::stod(value, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (value.empty() || used != value.size()) {
        throw parse_error(where + ": expected a number, got '" + value + "'");
    }
    return parsed;
}

bool config_bool(const std::string& value, const std::string& where) {
    if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
    if (value == "false" || value == "0" || value == "no" || value == "off") return false;
    throw parse_error(where + ": expected true or false, got '" + value + "'");
}

/// Applies `key=value` lines from the config file to every experiment
/// setting whose flag was not given on the command line (flags win).
void apply_experiment_config(experiment_cli& exp, const CLI::App& cmd) {
    std::ifstream in(exp.config_path);
    if (!in) throw io_error("cannot open config file '" + exp.config_path + "'");
    const auto given = [&cmd](const std::string& flag) { return cmd.count(flag) > 0; };
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const std::string text = detail::trim(line);
        if (text.empty()) continue;
        const std::string where = exp.config_path + ":" + std::to_string(line_no);
        const auto eq = text.find('=');
        if (eq == std::string::npos) {
            throw parse_error(where + ": expected key=value, got '" + text + "'");
        }
        const std::string key = detail::trim(text.substr(0, eq));
        const std::string value = detail::trim(text.substr(eq + 1));
        if (key == "manifest") {
            if (!given("--manifest")) exp.manifest = value;
        } else if (key == "split") {
            if (!given("--split")) exp.split = value;
        } else if (key == "reps") {
            if (!given("--reps")) exp.reps = config_uint(value, where);
        } else if (key == "lr") {
            if (!given("--lr")) exp.lr = config_real(value, where);
        } else if (key == "momentum") {
            if (!given("--momentum")) exp.momentum = config_real(value, where);
        } else if (key == "batch") {
            if (!given("--batch")) exp.batch = config_uint(value, where);
        } else if (key == "epochs") {
            if (!given("--epochs")) exp.epochs = config_uint(value, where);
        } else if (key == "preset") {
            if (!given("--preset") && !given("--arch")) exp.arch.preset = value;
        } else if (key == "fusion") {
            if (!given("--fusion")) exp.fusion = value;
        } else if (key == "lbp_aug") {
            if (!given("--no-lbp-aug")) exp.no_lbp = !config_bool(value, where);
        } else if (key == "seed") {
            if (!given("--seed")) exp.seed = config_uint(value, where);
        } else if (key == "out") {
            if (!given("--out")) exp.out = value;
        } else {
            throw parse_error(where + ": unknown key '" + key + "'");
        }
    }
}

int run_experiment_cmd(const experiment_config& cfg, const std::string& out_dir) {
    const experiment_result result = run_experiment(cfg);
    const experiment_paths paths = write_experiment_outputs(cfg, result, out_dir);
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.2f", result.summary[3][0].mean);
    std::cout << "fused mean accuracy " << buf << " over " << cfg.reps << " repetitions\n"
              << paths.report << "\n"
              << paths.reps << "\n"
              << paths.run_config << "\n";
    return 0;
}

int run_tsne(const std::string& manifest_path, const arch_options& arch,
             const std::string& weights_path, const std::string& layer, double perplexity,
             std::uint64_t seed, const std::string& out_svg) {
    const model_config cfg = arch.resolve();
    network<float> net(cfg, mix_seed(seed, 1));
    if (!weights_path.empty()) net.load_weights(weights_path);
    const auto data = load_dataset(load_manifest(manifest_path));

    std::vector<std::vector<float>> features;
    std::vector<int> classes;
    for (const auto& d : data) {
        for (const auto& s : prepare_test_image(d.image, d.label, cfg.input_size, d.id)) {
            const tensor_f act = net.extract_activations(s.input, layer);
            features.emplace_back(act.data(), act.data() + act.size());
            classes.push_back(static_cast<int>(d.label));
        }
    }
    tensor_d points({features.size(), features.front().size()});
    for (std::size_t i = 0; i < features.size(); ++i) {
        for (std::size_t k = 0; k < features[i].size(); ++k) {
            points.at(i, k) = features[i][k];
        }
    }
    tsne_config tc;
    tc.perplexity = perplexity;
    tc.seed = mix_seed(seed, 2);
    const tsne_result result = tsne_embed(points, tc);

    std::ofstream out(out_svg, std::ios::binary);
    if (!out) throw io_error("cannot write '" + out_svg + "'");
    write_scatter_svg(out, result.embedding, classes);
    std::cout << "embedded " << points.extent(0) << " points, divergence "
              << result.kl_trace.front() << " -> " << result.kl_trace.back() << "\n"
              << out_svg << "\n";
    return 0;
}

int run_report(const std::string& reps_path, const std::string& out_path) {
    const reps_table table = load_reps_csv(reps_path);
    if (out_path.empty()) {
        write_report_csv(std::cout, table.split_name, table.result);
        return 0;
    }
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw io_error("cannot write '" + out_path + "'");
    write_report_csv(out, table.split_name, table.result);
    std::cout << out_path << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Retinal image classification pipeline: channel splitting, local binary "
                 "pattern augmentation, CNN training, decision fusion, and t-SNE maps"};
    app.require_subcommand(1);

    // ---- synth ----
    synth_config synth;
    auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic two-class image set");
    synth_cmd->add_option("--out", synth.out_dir, "Output directory")->required();
    synth_cmd->add_option("--per-class", synth.per_class, "Images per class");
    synth_cmd->add_option("--width", synth.width, "Image width");
    synth_cmd->add_option("--height", synth.height, "Image height");
    synth_cmd->add_option("--seed", synth.seed, "Generator seed");

    // ---- augment ----
    std::string augment_image, augment_out;
    auto* augment_cmd =
        app.add_subcommand("augment", "Write the six per-channel training planes of one image");
    augment_cmd->add_option("image", augment_image, "Input image (PGM/PPM)")->required();
    augment_cmd->add_option("--out", augment_out, "Output directory")->required();

    // ---- train ----
    std::string train_manifest, train_out = "model.glcw";
    arch_options train_arch;
    double train_lr = 0.0001, train_momentum = 0.9;
    std::size_t train_batch = 20, train_epochs = 80;
    std::uint64_t train_seed = 0;
    bool train_no_lbp = false;
    auto* train_cmd = app.add_subcommand("train", "Train a model on every manifest image");
    train_cmd->add_option("--manifest", train_manifest, "Dataset manifest CSV")->required();
    add_arch_options(train_cmd, train_arch);
    train_cmd->add_option("--lr", train_lr, "Learning rate");
    train_cmd->add_option("--momentum", train_momentum, "Momentum coefficient");
    train_cmd->add_option("--batch", train_batch, "Minibatch size");
    train_cmd->add_option("--epochs", train_epochs, "Training epochs");
    train_cmd->add_option("--seed", train_seed, "Master seed");
    train_cmd->add_flag("--no-lbp-aug", train_no_lbp, "Train on plain channel planes only");
    train_cmd->add_option("--out", train_out, "Weights output file");

    // ---- eval ----
    std::string eval_manifest, eval_weights, eval_fusion = "majority";
    arch_options eval_arch;
    auto* eval_cmd = app.add_subcommand("eval", "Evaluate saved weights with channel fusion");
    eval_cmd->add_option("--manifest", eval_manifest, "Dataset manifest CSV")->required();
    eval_cmd->add_option("--weights", eval_weights, "Weights file")->required();
    add_arch_options(eval_cmd, eval_arch);
    eval_cmd->add_option("--fusion", eval_fusion, "Fusion rule: majority or meanprob");

    // ---- experiment ----
    experiment_cli exp;
    auto* exp_cmd = app.add_subcommand(
        "experiment", "Repeated stratified split / train / fused evaluation protocol");
    exp_cmd->add_option("--config", exp.config_path, "Key=value file; command line flags win");
    exp_cmd->add_option("--manifest", exp.manifest, "Dataset manifest CSV");
    exp_cmd->add_option("--split", exp.split, "Train:test percentages, e.g. 80:20");
    exp_cmd->add_option("--reps", exp.reps, "Repetitions");
    add_arch_options(exp_cmd, exp.arch);
    exp_cmd->add_option("--lr", exp.lr, "Learning rate");
    exp_cmd->add_option("--momentum", exp.momentum, "Momentum coefficient");
    exp_cmd->add_option("--batch", exp.batch, "Minibatch size");
    exp_cmd->add_option("--epochs", exp.epochs, "Training epochs");
    exp_cmd->add_option("--fusion", exp.fusion, "Fusion rule: majority or meanprob");
    exp_cmd->add_flag("--no-lbp-aug", exp.no_lbp, "Train on plain channel planes only");
    exp_cmd->add_option("--seed", exp.seed, "Master seed");
    exp_cmd->add_option("--jobs", exp.jobs, "Worker threads across repetitions");
    exp_cmd->add_option("--out", exp.out, "Output directory");

    // ---- tsne ----
    std::string tsne_manifest, tsne_weights, tsne_layer = "fc-final", tsne_out = "embedding.svg";
    arch_options tsne_arch;
    double tsne_perplexity = 30.0;
    std::uint64_t tsne_seed = 0;
    auto* tsne_cmd =
        app.add_subcommand("tsne", "Embed per-channel activations into a 2-D scatter plot");
    tsne_cmd->add_option("--manifest", tsne_manifest, "Dataset manifest CSV")->required();
    tsne_cmd->add_option("--weights", tsne_weights, "Weights file (optional)");
    add_arch_options(tsne_cmd, tsne_arch);
    tsne_cmd->add_option("--layer", tsne_layer, "Layer whose activations are embedded");
    tsne_cmd->add_option("--perplexity", tsne_perplexity, "Target perplexity");
    tsne_cmd->add_option("--seed", tsne_seed, "Embedding seed");
    tsne_cmd->add_option("--out", tsne_out, "SVG output path");

    // ---- report ----
    std::string report_reps, report_out;
    auto* report_cmd =
        app.add_subcommand("report", "Rebuild the summary report from a per-repetition CSV");
    report_cmd->add_option("reps", report_reps, "Per-repetition CSV")->required();
    report_cmd->add_option("--out", report_out, "Report output path (default: stdout)");

    app.failure_message(CLI::FailureMessage::help);
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        // --help and friends are successful exits; real parse errors are usage errors
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (synth_cmd->parsed()) return run_synth(synth);
        if (augment_cmd->parsed()) return run_augment(augment_image, augment_out);
        if (train_cmd->parsed()) {
            return run_train(train_manifest, train_arch, train_lr, train_momentum, train_batch,
                             train_epochs, train_seed, !train_no_lbp, train_out);
        }
        if (eval_cmd->parsed()) {
            return run_eval(eval_manifest, eval_arch, eval_weights,
                            parse_fusion_rule(eval_fusion));
        }
        if (exp_cmd->parsed()) {
            if (!exp.config_path.empty()) apply_experiment_config(exp, *exp_cmd);
            if (exp.manifest.empty()) {
                std::cerr << "error: experiment needs a manifest "
                             "(--manifest or manifest= in the config file)\n";
                return 1;
            }
            experiment_config cfg;
            cfg.manifest_path = exp.manifest;
            cfg.arch = exp.arch.resolve();
            cfg.split = parse_split_spec(exp.split);
            cfg.reps = exp.reps;
            cfg.learning_rate = exp.lr;
            cfg.momentum = exp.momentum;
            cfg.batch_size = exp.batch;
            cfg.epochs = exp.epochs;
            cfg.fusion = parse_fusion_rule(exp.fusion);
            cfg.lbp_augment = !exp.no_lbp;
            cfg.seed = exp.seed;
            cfg.jobs = exp.jobs;
            return run_experiment_cmd(cfg, exp.out);
        }
        if (tsne_cmd->parsed()) {
            return run_tsne(tsne_manifest, tsne_arch, tsne_weights, tsne_layer, tsne_perplexity,
                            tsne_seed, tsne_out);
        }
        if (report_cmd->parsed()) return run_report(report_reps, report_out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
