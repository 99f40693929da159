#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fundus/augment.hpp"
#include "fundus/clahe.hpp"
#include "fundus/dataset.hpp"
#include "fundus/metrics.hpp"
#include "fundus/nn/network.hpp"
#include "fundus/smote.hpp"

namespace fundus {

/// End-to-end run configuration. The master seed fans out to fixed per-stage
/// streams (split 1, smote 2, train 3, augment 4 via derive_seed), so one
/// knob reproduces the whole run; per-stage seeds inside the sub-configs are
/// overwritten.
struct PipelineConfig {
    ClassMode mode = ClassMode::binary;

    // Either a class-folder tree ...
    std::string input_root;
    // ... or a CSV manifest plus image directory.
    std::string manifest;
    std::string image_dir;
    std::string image_extension = ".pgm";

    int image_width = 32;
    int image_height = 32;
    bool gray = true;

    ClaheParams clahe;
    double split_ratio = 0.0;  // 0 = mode default: 0.8 binary, 0.85 multiclass

    bool smote_enabled = true;
    SmoteParams smote;

    bool augment_enabled = true;
    AugmentPolicy augment;

    TrainConfig training;

    std::string out_dir;
    std::uint64_t seed = 0;
};

struct PipelineResult {
    MetricsReport report;
    std::string report_json;
    std::size_t train_count = 0;
    std::size_t test_count = 0;
    std::vector<EpochStats> history;
};

ClassScheme scheme_for(ClassMode mode);
double default_ratio(ClassMode mode);

/// One split-manifest row; rows are written for every dataset index in
/// order, each marked train or test.
struct SplitRow {
    std::size_t index = 0;
    std::string path;
    int label = 0;
    bool is_test = false;
};

/// Ingests cfg's input (folder tree or manifest) with the scheme for its
/// mode.
Dataset ingest_input(const PipelineConfig& cfg, std::vector<std::string>* warnings = nullptr);

/// Runs CLAHE on each image's luminance (recombined into the original
/// channels) and writes the results as a class-folder tree under out_root,
/// keeping each source basename. Returns the enhanced tree re-ingested, so
/// downstream stages see the same dataset whether they start here or from
/// the directory.
Dataset enhance_dataset(const Dataset& ds, const ClaheParams& params,
                        const std::string& out_root);

/// Enhances a single image file (luma CLAHE, recombine, same format out).
void enhance_file(const std::string& input, const std::string& output,
                  const ClaheParams& params);

/// CSV with header index,path,label,part.
void write_split_manifest(const Dataset& ds, const SplitIndices& split,
                          const std::string& path);
std::vector<SplitRow> read_split_manifest(const std::string& path);

/// Flattens the train or test rows of a split manifest (ascending index)
/// into a feature set.
FeatureSet flatten_part(const std::vector<SplitRow>& rows, bool test_part,
                        const ClassScheme& scheme, int width, int height, bool gray);

/// Softmax scores on the test set, argmax predictions, confusion-based
/// report; AUC from the positive-class column (binary) or one-vs-rest macro.
MetricsReport evaluate_model(const Model& model, const FeatureSet& test);

/// ingest -> enhance -> split -> flatten -> SMOTE (train rows only) ->
/// train (per-epoch augmentation) -> predict on test -> metrics. Writes
/// enhanced/, split.csv, train.features, test.features,
/// train_smote.features, smote_provenance.csv, model.txt, report.json and
/// run.log under cfg.out_dir. Every artifact is deterministic in
/// (config, seed). Errors are rethrown with the failing stage named.
PipelineResult run_pipeline(const PipelineConfig& cfg);

}  // namespace fundus
