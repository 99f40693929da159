#include "fundus/pipeline.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "fundus/image.hpp"
#include "fundus/pnm.hpp"
#include "fundus/rng.hpp"

namespace fs = std::filesystem;

namespace fundus {

ClassScheme scheme_for(ClassMode mode) {
    return mode == ClassMode::binary ? ClassScheme::binary_scheme()
                                     : ClassScheme::multiclass_scheme();
}

double default_ratio(ClassMode mode) {
    return mode == ClassMode::binary ? 0.8 : 0.85;
}

Dataset ingest_input(const PipelineConfig& cfg, std::vector<std::string>* warnings) {
    const ClassScheme scheme = scheme_for(cfg.mode);
    if (!cfg.input_root.empty() && !cfg.manifest.empty()) {
        throw std::invalid_argument("pipeline: give either an input tree or a manifest");
    }
    if (!cfg.input_root.empty()) {
        return ingest_folder(cfg.input_root, scheme, warnings);
    }
    if (!cfg.manifest.empty()) {
        if (cfg.image_dir.empty()) {
            throw std::invalid_argument("pipeline: manifest input needs an image directory");
        }
        return ingest_manifest(cfg.manifest, cfg.image_dir, scheme, cfg.image_extension);
    }
    throw std::invalid_argument("pipeline: no input configured");
}

namespace {

Image enhance_image(const Image& img, const ClaheParams& params) {
    Plane luma = extract_luma(img);
    return recombine_luma(img, clahe(luma, params));
}

}  // namespace

void enhance_file(const std::string& input, const std::string& output,
                  const ClaheParams& params) {
    save_image(enhance_image(load_image(input), params), output);
}

Dataset enhance_dataset(const Dataset& ds, const ClaheParams& params,
                        const std::string& out_root) {
    for (const std::string& name : ds.scheme.names) {
        fs::create_directories(fs::path(out_root) / name);
    }
    std::set<std::string> written;
    for (const DatasetItem& item : ds.items) {
        const std::string base = fs::path(item.path).filename().string();
        const fs::path out =
            fs::path(out_root) / ds.scheme.names[static_cast<std::size_t>(item.label)] / base;
        if (!written.insert(out.string()).second) {
            throw std::runtime_error("enhance: output collision at " + out.string());
        }
        save_image(enhance_image(load_image(item.path), params), out.string());
    }
    return ingest_folder(out_root, ds.scheme);
}

void write_split_manifest(const Dataset& ds, const SplitIndices& split,
                          const std::string& path) {
    std::vector<bool> is_test(ds.size(), false);
    for (const std::size_t i : split.test) is_test.at(i) = true;

    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error(path + ": cannot open for writing");
    out << "index,path,label,part\n";
    for (std::size_t i = 0; i < ds.size(); ++i) {
        out << i << ',' << ds.items[i].path << ',' << ds.items[i].label << ','
            << (is_test[i] ? "test" : "train") << '\n';
    }
    if (!out) throw std::runtime_error(path + ": write failed");
}

std::vector<SplitRow> read_split_manifest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error(path + ": cannot open");
    std::string line;
    if (!std::getline(in, line) ||
        (line != "index,path,label,part" && line != "index,path,label,part\r")) {
        throw std::runtime_error(path + ": bad header, expected index,path,label,part");
    }

    std::vector<SplitRow> rows;
    for (int line_no = 2; std::getline(in, line); ++line_no) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::string where = path + ":" + std::to_string(line_no);

        // path is the one field that may not contain commas; index and the
        // trailing two fields are delimited by the first and last two commas.
        const auto c1 = line.find(',');
        const auto c3 = line.rfind(',');
        if (c1 == std::string::npos || c3 == std::string::npos || c3 <= c1) {
            throw std::runtime_error(where + ": malformed row");
        }
        const auto c2 = line.rfind(',', c3 - 1);
        if (c2 == std::string::npos || c2 <= c1) {
            throw std::runtime_error(where + ": malformed row");
        }

        SplitRow row;
        try {
            row.index = std::stoull(line.substr(0, c1));
            row.label = std::stoi(line.substr(c2 + 1, c3 - c2 - 1));
        } catch (const std::exception&) {
            throw std::runtime_error(where + ": malformed number");
        }
        row.path = line.substr(c1 + 1, c2 - c1 - 1);
        const std::string part = line.substr(c3 + 1);
        if (part == "test") {
            row.is_test = true;
        } else if (part == "train") {
            row.is_test = false;
        } else {
            throw std::runtime_error(where + ": part must be train or test, got '" + part +
                                     "'");
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

FeatureSet flatten_part(const std::vector<SplitRow>& rows, bool test_part,
                        const ClassScheme& scheme, int width, int height, bool gray) {
    Dataset part;
    part.scheme = scheme;
    for (const SplitRow& row : rows) {
        if (row.is_test == test_part) part.items.push_back({row.path, row.label});
    }
    return flatten(part, width, height, gray);
}

namespace {

std::string fmt(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

MetricsReport evaluate_scores(const FeatureMatrix& scores, const std::vector<int>& labels) {
    std::vector<int> y_pred(scores.rows, 0);
    for (std::size_t i = 0; i < scores.rows; ++i) {
        const double* row = scores.row(i);
        int best = 0;
        for (std::size_t k = 1; k < scores.cols; ++k) {
            if (row[k] > row[best]) best = static_cast<int>(k);
        }
        y_pred[i] = best;
    }
    MetricsReport report =
        multiclass_report(confusion(labels, y_pred, static_cast<int>(scores.cols)));
    if (scores.cols == 2) {
        std::vector<double> positive(scores.rows);
        for (std::size_t i = 0; i < scores.rows; ++i) positive[i] = scores.at(i, 1);
        report.auc = roc_auc(positive, labels);
    } else {
        report.auc = macro_auc_ovr(scores, labels);
    }
    report.auc_defined = true;
    return report;
}

[[noreturn]] void stage_fail(const std::string& stage, const std::exception& e) {
    throw std::runtime_error("stage " + stage + ": " + e.what());
}

}  // namespace

MetricsReport evaluate_model(const Model& model, const FeatureSet& test) {
    return evaluate_scores(predict(model, test.features), test.labels);
}

PipelineResult run_pipeline(const PipelineConfig& cfg) {
    if (cfg.out_dir.empty()) throw std::invalid_argument("pipeline: no output directory");
    fs::create_directories(cfg.out_dir);
    const auto artifact = [&](const char* name) {
        return (fs::path(cfg.out_dir) / name).string();
    };

    const ClassScheme scheme = scheme_for(cfg.mode);
    const double ratio = cfg.split_ratio > 0.0 ? cfg.split_ratio : default_ratio(cfg.mode);
    const std::uint64_t seed_split = derive_seed(cfg.seed, 1);
    const std::uint64_t seed_smote = derive_seed(cfg.seed, 2);
    const std::uint64_t seed_train = derive_seed(cfg.seed, 3);
    const std::uint64_t seed_augment = derive_seed(cfg.seed, 4);

    std::ofstream log(artifact("run.log"), std::ios::binary);
    if (!log) throw std::runtime_error(artifact("run.log") + ": cannot open for writing");
    log << "fundus pipeline log\n";
    log << "mode " << (cfg.mode == ClassMode::binary ? "binary" : "multiclass") << '\n';
    log << "master_seed " << cfg.seed << '\n';
    log << "stage_seeds split " << seed_split << " smote " << seed_smote << " train "
        << seed_train << " augment " << seed_augment << '\n';

    // ingest + enhance
    Dataset enhanced;
    try {
        std::vector<std::string> warnings;
        const Dataset raw = ingest_input(cfg, &warnings);
        for (const std::string& w : warnings) log << "warning " << w << '\n';
        log << "input " << (cfg.input_root.empty() ? cfg.manifest : cfg.input_root) << " images "
            << raw.size() << '\n';
        enhanced = enhance_dataset(raw, cfg.clahe, artifact("enhanced"));
        log << "enhance tiles " << cfg.clahe.tile_rows << 'x' << cfg.clahe.tile_cols
            << " clip " << fmt(cfg.clahe.clip_factor) << '\n';
    } catch (const std::exception& e) {
        stage_fail("enhance", e);
    }

    // split
    SplitIndices split;
    try {
        split = stratified_split(enhanced, ratio, seed_split);
        write_split_manifest(enhanced, split, artifact("split.csv"));
        log << "split ratio " << fmt(ratio) << " train " << split.train.size() << " test "
            << split.test.size() << '\n';
    } catch (const std::exception& e) {
        stage_fail("split", e);
    }

    // flatten
    FeatureSet train_set, test_set;
    try {
        const auto rows = read_split_manifest(artifact("split.csv"));
        train_set = flatten_part(rows, false, scheme, cfg.image_width, cfg.image_height,
                                 cfg.gray);
        test_set = flatten_part(rows, true, scheme, cfg.image_width, cfg.image_height,
                                cfg.gray);
        save_features(train_set, artifact("train.features"));
        save_features(test_set, artifact("test.features"));
        log << "flatten " << cfg.image_width << 'x' << cfg.image_height << " gray "
            << (cfg.gray ? 1 : 0) << " dim " << train_set.features.cols << '\n';
    } catch (const std::exception& e) {
        stage_fail("flatten", e);
    }

    // smote (train rows only)
    FeatureSet fit_set = std::move(train_set);
    try {
        if (cfg.smote_enabled) {
            SmoteParams params = cfg.smote;
            params.seed = seed_smote;
            const SmoteResult balanced = smote(fit_set.features, fit_set.labels, params);
            log << "smote k " << params.k << " rows " << fit_set.features.rows << " -> "
                << balanced.features.rows << '\n';
            fit_set.features = balanced.features;
            fit_set.labels = balanced.labels;
            save_features(fit_set, artifact("train_smote.features"));
            save_provenance(balanced.provenance, artifact("smote_provenance.csv"));
        } else {
            log << "smote disabled\n";
        }
    } catch (const std::exception& e) {
        stage_fail("smote", e);
    }

    // train
    TrainResult trained;
    try {
        const NetworkConfig net = NetworkConfig::default_config(
            fit_set.image_width, fit_set.image_height, fit_set.image_channels,
            scheme.num_classes());
        TrainConfig tc = cfg.training;
        tc.seed = seed_train;
        AugmentPolicy policy = cfg.augment;
        policy.seed = seed_augment;

        log << "train epochs " << tc.epochs << " batch " << tc.batch_size << " lr "
            << fmt(tc.learning_rate) << " l2 " << fmt(tc.l2_lambda) << " optimizer "
            << (tc.optimizer == OptimizerKind::sgd_momentum ? "sgd-momentum" : "adam") << '\n';
        if (cfg.augment_enabled) {
            log << "augment rotation " << fmt(policy.max_rotation_deg) << " shift "
                << fmt(policy.max_shift) << " zoom " << fmt(policy.max_zoom_delta) << " shear "
                << fmt(policy.max_shear_deg) << " flip " << (policy.allow_flip_h ? 1 : 0)
                << '\n';
        } else {
            log << "augment disabled\n";
        }

        trained = train(fit_set, net, tc, cfg.augment_enabled ? &policy : nullptr);
        for (std::size_t e = 0; e < trained.history.size(); ++e) {
            char line[96];
            std::snprintf(line, sizeof line, "epoch %zu loss %.6f acc %.4f\n", e + 1,
                          trained.history[e].loss, trained.history[e].accuracy);
            log << line;
        }
        save_model(trained.model, artifact("model.txt"));
    } catch (const std::exception& e) {
        stage_fail("train", e);
    }

    // evaluate
    PipelineResult result;
    try {
        result.report = evaluate_model(trained.model, test_set);
        result.report_json = report_to_json(result.report, scheme.names);
        std::ofstream json(artifact("report.json"), std::ios::binary);
        if (!json) throw std::runtime_error("cannot write report.json");
        json << result.report_json;
        char line[64];
        std::snprintf(line, sizeof line, "test accuracy %.4f auc %.4f\n",
                      result.report.accuracy, result.report.auc);
        log << line;
    } catch (const std::exception& e) {
        stage_fail("evaluate", e);
    }

    result.train_count = split.train.size();
    result.test_count = split.test.size();
    result.history = std::move(trained.history);
    return result;
}

}  // namespace fundus
