// Command-line front end: each subcommand exposes one pipeline stage with
// file-based inputs and outputs, and `pipeline` chains them all.

#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "fundus/pipeline.hpp"
#include "fundus/pnm.hpp"
#include "fundus/rng.hpp"

namespace {

using namespace fundus;

ClassMode parse_mode(const std::string& mode) {
    return mode == "multiclass" ? ClassMode::multiclass : ClassMode::binary;
}

OptimizerKind parse_optimizer(const std::string& name) {
    return name == "adam" ? OptimizerKind::adam : OptimizerKind::sgd_momentum;
}

void add_clahe_options(CLI::App* cmd, ClaheParams& params) {
    cmd->add_option("--tile-rows", params.tile_rows, "CLAHE tile grid rows")
        ->capture_default_str();
    cmd->add_option("--tile-cols", params.tile_cols, "CLAHE tile grid columns")
        ->capture_default_str();
    cmd->add_option("--clip", params.clip_factor, "clip limit as a multiple of the mean bin")
        ->capture_default_str();
}

void add_augment_options(CLI::App* cmd, AugmentPolicy& policy, bool& enabled,
                         bool default_on) {
    enabled = default_on;
    if (default_on) {
        cmd->add_flag("--no-augment{false},--augment{true}", enabled,
                      "per-epoch random affine augmentation (default on)");
    } else {
        cmd->add_flag("--augment", enabled, "enable per-epoch random affine augmentation");
    }
    cmd->add_option("--max-rotation", policy.max_rotation_deg, "max |rotation| in degrees")
        ->capture_default_str();
    cmd->add_option("--max-shift", policy.max_shift, "max |shift| as a fraction of size")
        ->capture_default_str();
    cmd->add_option("--max-zoom", policy.max_zoom_delta, "max |zoom - 1|")
        ->capture_default_str();
    cmd->add_option("--max-shear", policy.max_shear_deg, "max |shear| in degrees")
        ->capture_default_str();
    cmd->add_flag("--no-flip{false},--flip{true}", policy.allow_flip_h,
                  "allow horizontal flips (default on)");
}

void add_train_options(CLI::App* cmd, TrainConfig& tc, std::string& optimizer) {
    cmd->add_option("--epochs", tc.epochs, "training epochs")->capture_default_str();
    cmd->add_option("--batch", tc.batch_size, "mini-batch size")->capture_default_str();
    cmd->add_option("--lr", tc.learning_rate, "learning rate")->capture_default_str();
    cmd->add_option("--l2", tc.l2_lambda, "L2 penalty on weights")->capture_default_str();
    cmd->add_option("--optimizer", optimizer, "sgd | adam")
        ->check(CLI::IsMember({"sgd", "adam"}))
        ->capture_default_str();
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error(path + ": cannot open for writing");
    out << text;
    if (!out) throw std::runtime_error(path + ": write failed");
}

struct Predictions {
    std::vector<int> actual;
    std::vector<int> predicted;
    FeatureMatrix scores;
};

// Header actual,predicted,score_0,...,score_{K-1}; one row per sample.
Predictions load_predictions(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error(path + ": cannot open");
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error(path + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();

    std::vector<std::string> header;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        header.push_back(line.substr(start, comma - start));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    if (header.size() < 4 || header[0] != "actual" || header[1] != "predicted") {
        throw std::runtime_error(path + ": expected header actual,predicted,score_0,...");
    }
    const std::size_t k = header.size() - 2;
    for (std::size_t c = 0; c < k; ++c) {
        if (header[c + 2] != "score_" + std::to_string(c)) {
            throw std::runtime_error(path + ": bad score column '" + header[c + 2] + "'");
        }
    }

    Predictions preds;
    std::vector<std::vector<double>> rows;
    for (int line_no = 2; std::getline(in, line); ++line_no) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<double> fields;
        std::size_t pos = 0;
        while (true) {
            const auto comma = line.find(',', pos);
            try {
                fields.push_back(std::stod(line.substr(pos, comma - pos)));
            } catch (const std::exception&) {
                throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                         ": malformed value");
            }
            if (comma == std::string::npos) break;
            pos = comma + 1;
        }
        if (fields.size() != header.size()) {
            throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                     ": wrong column count");
        }
        preds.actual.push_back(static_cast<int>(fields[0]));
        preds.predicted.push_back(static_cast<int>(fields[1]));
        rows.emplace_back(fields.begin() + 2, fields.end());
    }

    preds.scores = FeatureMatrix(rows.size(), k);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        std::copy(rows[r].begin(), rows[r].end(), preds.scores.row(r));
    }
    return preds;
}

void print_report_summary(const MetricsReport& report) {
    char line[64];
    std::snprintf(line, sizeof line, "accuracy %.4f", report.accuracy);
    std::cout << line;
    if (report.auc_defined) {
        std::snprintf(line, sizeof line, " auc %.4f", report.auc);
        std::cout << line;
    }
    std::cout << '\n';
}

std::string history_log(const std::vector<EpochStats>& history) {
    std::string text;
    char line[96];
    for (std::size_t e = 0; e < history.size(); ++e) {
        std::snprintf(line, sizeof line, "epoch %zu loss %.6f acc %.4f\n", e + 1,
                      history[e].loss, history[e].accuracy);
        text += line;
    }
    return text;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"fundus retina-image classification pipeline"};
    app.require_subcommand(1);

    // ---- enhance ----
    auto* enhance_cmd = app.add_subcommand(
        "enhance", "CLAHE on the luminance channel (single file or whole dataset)");
    enhance_cmd->set_config("--config");
    std::string enh_input, enh_output, enh_root, enh_manifest, enh_image_dir;
    std::string enh_ext = ".pgm", enh_mode = "binary", enh_out;
    ClaheParams enh_clahe;
    enhance_cmd->add_option("--input", enh_input, "single input image (PGM/PPM)");
    enhance_cmd->add_option("--output", enh_output, "single output image");
    enhance_cmd->add_option("--root", enh_root, "class-folder dataset root");
    enhance_cmd->add_option("--manifest", enh_manifest, "CSV manifest id_code,diagnosis");
    enhance_cmd->add_option("--image-dir", enh_image_dir, "image directory for the manifest");
    enhance_cmd->add_option("--extension", enh_ext, "manifest image extension")
        ->capture_default_str();
    enhance_cmd->add_option("--mode", enh_mode, "binary | multiclass")
        ->check(CLI::IsMember({"binary", "multiclass"}))
        ->capture_default_str();
    enhance_cmd->add_option("--out", enh_out, "output tree for dataset mode");
    add_clahe_options(enhance_cmd, enh_clahe);
    enhance_cmd->callback([&] {
        if (!enh_input.empty()) {
            if (enh_output.empty()) throw CLI::ValidationError("--input needs --output");
            enhance_file(enh_input, enh_output, enh_clahe);
            std::cout << "enhanced " << enh_input << " -> " << enh_output << '\n';
            return;
        }
        if (enh_out.empty()) throw CLI::ValidationError("dataset mode needs --out");
        PipelineConfig cfg;
        cfg.mode = parse_mode(enh_mode);
        cfg.input_root = enh_root;
        cfg.manifest = enh_manifest;
        cfg.image_dir = enh_image_dir;
        cfg.image_extension = enh_ext;
        std::vector<std::string> warnings;
        const Dataset ds = ingest_input(cfg, &warnings);
        for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
        const Dataset out = enhance_dataset(ds, enh_clahe, enh_out);
        std::cout << "enhanced " << out.size() << " images -> " << enh_out << '\n';
    });

    // ---- split ----
    auto* split_cmd =
        app.add_subcommand("split", "stratified train/test split of a class-folder tree");
    split_cmd->set_config("--config");
    std::string spl_root, spl_mode = "binary", spl_out;
    double spl_ratio = 0.0;
    std::uint64_t spl_seed = 0;
    split_cmd->add_option("--root", spl_root, "class-folder dataset root")->required();
    split_cmd->add_option("--mode", spl_mode, "binary | multiclass")
        ->check(CLI::IsMember({"binary", "multiclass"}))
        ->capture_default_str();
    split_cmd->add_option("--ratio", spl_ratio,
                          "train fraction (default 0.8 binary, 0.85 multiclass)");
    split_cmd->add_option("--seed", spl_seed, "split seed")->capture_default_str();
    split_cmd->add_option("--out", spl_out, "split manifest CSV path")->required();
    split_cmd->callback([&] {
        const ClassMode mode = parse_mode(spl_mode);
        std::vector<std::string> warnings;
        const Dataset ds = ingest_folder(spl_root, scheme_for(mode), &warnings);
        for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
        const double ratio = spl_ratio > 0.0 ? spl_ratio : default_ratio(mode);
        const SplitIndices split = stratified_split(ds, ratio, spl_seed);
        write_split_manifest(ds, split, spl_out);
        std::cout << "split train " << split.train.size() << " test " << split.test.size()
                  << " -> " << spl_out << '\n';
    });

    // ---- flatten ----
    auto* flatten_cmd = app.add_subcommand(
        "flatten", "resize + rescale one part of a split into a feature file");
    flatten_cmd->set_config("--config");
    std::string fla_split, fla_part = "train", fla_mode = "binary", fla_out;
    int fla_w = 32, fla_h = 32;
    bool fla_rgb = false;
    flatten_cmd->add_option("--split", fla_split, "split manifest CSV")->required();
    flatten_cmd->add_option("--part", fla_part, "train | test")
        ->check(CLI::IsMember({"train", "test"}))
        ->capture_default_str();
    flatten_cmd->add_option("--mode", fla_mode, "binary | multiclass")
        ->check(CLI::IsMember({"binary", "multiclass"}))
        ->capture_default_str();
    flatten_cmd->add_option("--width", fla_w, "target width")->capture_default_str();
    flatten_cmd->add_option("--height", fla_h, "target height")->capture_default_str();
    flatten_cmd->add_flag("--rgb", fla_rgb, "keep color channels instead of luminance");
    flatten_cmd->add_option("--out", fla_out, "output feature file")->required();
    flatten_cmd->callback([&] {
        const auto rows = read_split_manifest(fla_split);
        const FeatureSet set = flatten_part(rows, fla_part == "test",
                                            scheme_for(parse_mode(fla_mode)), fla_w, fla_h,
                                            !fla_rgb);
        save_features(set, fla_out);
        std::cout << "flattened " << set.size() << " x " << set.features.cols << " -> "
                  << fla_out << '\n';
    });

    // ---- smote ----
    auto* smote_cmd =
        app.add_subcommand("smote", "oversample minority classes in a feature file");
    smote_cmd->set_config("--config");
    std::string smo_in, smo_out, smo_prov;
    SmoteParams smo_params;
    smote_cmd->add_option("--features", smo_in, "input feature file")->required();
    smote_cmd->add_option("--out", smo_out, "output feature file")->required();
    smote_cmd->add_option("--provenance", smo_prov, "synthetic-row provenance CSV");
    smote_cmd->add_option("--k", smo_params.k, "neighbor count")->capture_default_str();
    smote_cmd->add_option("--seed", smo_params.seed, "sampling seed")->capture_default_str();
    smote_cmd->callback([&] {
        FeatureSet set = load_features(smo_in);
        SmoteParams params = smo_params;
        params.targets.assign(static_cast<std::size_t>(set.num_classes), 0);
        std::vector<std::size_t> counts(params.targets.size(), 0);
        for (const int label : set.labels) counts[static_cast<std::size_t>(label)]++;
        const std::size_t majority = *std::max_element(counts.begin(), counts.end());
        for (std::size_t c = 0; c < params.targets.size(); ++c) {
            params.targets[c] = counts[c] == 0 ? 0 : majority;
        }
        const SmoteResult result = smote(set.features, set.labels, params);
        const std::size_t before = set.features.rows;
        set.features = result.features;
        set.labels = result.labels;
        save_features(set, smo_out);
        if (!smo_prov.empty()) save_provenance(result.provenance, smo_prov);
        std::cout << "smote rows " << before << " -> " << set.features.rows << " -> "
                  << smo_out << '\n';
    });

    // ---- train ----
    auto* train_cmd = app.add_subcommand("train", "train the CNN on a feature file");
    train_cmd->set_config("--config");
    std::string tr_features, tr_model, tr_log, tr_optimizer = "sgd";
    TrainConfig tr_config;
    AugmentPolicy tr_policy;
    bool tr_augment = false;
    train_cmd->add_option("--features", tr_features, "training feature file")->required();
    train_cmd->add_option("--model", tr_model, "output model file")->required();
    train_cmd->add_option("--log", tr_log, "per-epoch history log");
    add_train_options(train_cmd, tr_config, tr_optimizer);
    train_cmd->add_option("--seed", tr_config.seed, "training seed")->capture_default_str();
    add_augment_options(train_cmd, tr_policy, tr_augment, false);
    train_cmd->add_option("--augment-seed", tr_policy.seed, "augmentation stream seed")
        ->capture_default_str();
    train_cmd->callback([&] {
        const FeatureSet set = load_features(tr_features);
        TrainConfig tc = tr_config;
        tc.optimizer = parse_optimizer(tr_optimizer);
        const NetworkConfig net = NetworkConfig::default_config(
            set.image_width, set.image_height, set.image_channels, set.num_classes);
        const TrainResult result = train(set, net, tc, tr_augment ? &tr_policy : nullptr);
        save_model(result.model, tr_model);
        if (!tr_log.empty()) write_text(tr_log, history_log(result.history));
        char line[96];
        std::snprintf(line, sizeof line, "trained %d epochs, final loss %.6f acc %.4f\n",
                      tc.epochs, result.history.back().loss, result.history.back().accuracy);
        std::cout << line << "model -> " << tr_model << '\n';
    });

    // ---- evaluate ----
    auto* eval_cmd = app.add_subcommand(
        "evaluate", "metrics report from a model + features, or a predictions CSV");
    eval_cmd->set_config("--config");
    std::string ev_model, ev_features, ev_preds, ev_out;
    eval_cmd->add_option("--model", ev_model, "model file");
    eval_cmd->add_option("--features", ev_features, "labeled feature file");
    eval_cmd->add_option("--predictions", ev_preds,
                         "CSV actual,predicted,score_0,... instead of a model run");
    eval_cmd->add_option("--out", ev_out, "report JSON path")->required();
    eval_cmd->callback([&] {
        MetricsReport report;
        std::vector<std::string> names;
        if (!ev_preds.empty()) {
            const Predictions preds = load_predictions(ev_preds);
            const int k = static_cast<int>(preds.scores.cols);
            report = multiclass_report(confusion(preds.actual, preds.predicted, k));
            try {
                if (k == 2) {
                    std::vector<double> positive(preds.scores.rows);
                    for (std::size_t i = 0; i < positive.size(); ++i) {
                        positive[i] = preds.scores.at(i, 1);
                    }
                    report.auc = roc_auc(positive, preds.actual);
                } else {
                    report.auc = macro_auc_ovr(preds.scores, preds.actual);
                }
                report.auc_defined = true;
            } catch (const std::exception& e) {
                std::cerr << "warning: auc unavailable: " << e.what() << '\n';
            }
        } else {
            if (ev_model.empty() || ev_features.empty()) {
                throw CLI::ValidationError("need --model and --features, or --predictions");
            }
            const Model model = load_model(ev_model);
            const FeatureSet set = load_features(ev_features);
            report = evaluate_model(model, set);
            if (set.num_classes == 2) {
                names = ClassScheme::binary_scheme().names;
            } else if (set.num_classes == 5) {
                names = ClassScheme::multiclass_scheme().names;
            }
        }
        write_text(ev_out, report_to_json(report, names));
        print_report_summary(report);
        std::cout << "report -> " << ev_out << '\n';
    });

    // ---- pipeline ----
    auto* pipe_cmd = app.add_subcommand("pipeline", "run every stage end to end");
    pipe_cmd->set_config("--config");
    PipelineConfig cfg;
    std::string pi_mode = "binary", pi_optimizer = "sgd";
    bool pi_rgb = false;
    pipe_cmd->add_option("--root", cfg.input_root, "class-folder dataset root");
    pipe_cmd->add_option("--manifest", cfg.manifest, "CSV manifest id_code,diagnosis");
    pipe_cmd->add_option("--image-dir", cfg.image_dir, "image directory for the manifest");
    pipe_cmd->add_option("--extension", cfg.image_extension, "manifest image extension")
        ->capture_default_str();
    pipe_cmd->add_option("--mode", pi_mode, "binary | multiclass")
        ->check(CLI::IsMember({"binary", "multiclass"}))
        ->capture_default_str();
    pipe_cmd->add_option("--out", cfg.out_dir, "output directory")->required();
    pipe_cmd->add_option("--seed", cfg.seed, "master seed")->capture_default_str();
    pipe_cmd->add_option("--width", cfg.image_width, "network input width")
        ->capture_default_str();
    pipe_cmd->add_option("--height", cfg.image_height, "network input height")
        ->capture_default_str();
    pipe_cmd->add_flag("--rgb", pi_rgb, "keep color channels instead of luminance");
    add_clahe_options(pipe_cmd, cfg.clahe);
    pipe_cmd->add_option("--ratio", cfg.split_ratio,
                         "train fraction (default 0.8 binary, 0.85 multiclass)");
    pipe_cmd->add_flag("--no-smote{false},--smote{true}", cfg.smote_enabled,
                       "SMOTE on the training rows (default on)");
    pipe_cmd->add_option("--k", cfg.smote.k, "SMOTE neighbor count")->capture_default_str();
    add_train_options(pipe_cmd, cfg.training, pi_optimizer);
    add_augment_options(pipe_cmd, cfg.augment, cfg.augment_enabled, true);
    pipe_cmd->callback([&] {
        cfg.mode = parse_mode(pi_mode);
        cfg.gray = !pi_rgb;
        cfg.training.optimizer = parse_optimizer(pi_optimizer);
        const PipelineResult result = run_pipeline(cfg);
        std::cout << "train " << result.train_count << " test " << result.test_count << '\n';
        print_report_summary(result.report);
        std::cout << "report -> " << cfg.out_dir << "/report.json\n";
    });

    try {
        CLI11_PARSE(app, argc, argv);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
