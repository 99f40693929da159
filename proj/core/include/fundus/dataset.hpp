#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "fundus/features.hpp"

namespace fundus {

enum class ClassMode { binary, multiclass };

/// Label taxonomy. Label k means names[k]; binary is ["No_DR","DR"],
/// multiclass the five-grade scheme.
struct ClassScheme {
    ClassMode mode = ClassMode::binary;
    std::vector<std::string> names;

    static ClassScheme binary_scheme();
    static ClassScheme multiclass_scheme();

    int num_classes() const { return static_cast<int>(names.size()); }
};

struct DatasetItem {
    std::string path;
    int label = 0;
};

struct Dataset {
    std::vector<DatasetItem> items;
    ClassScheme scheme;

    std::size_t size() const { return items.size(); }
    std::vector<std::size_t> class_counts() const;
};

/// Disjoint index lists covering 0..n-1, each sorted ascending.
struct SplitIndices {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

/// Scans a tree whose subfolders are class names from the scheme. Items are
/// ordered class by class (scheme order), lexicographically within each
/// folder. A subfolder not named in the scheme is an error; a missing or
/// empty class folder only appends to warnings.
Dataset ingest_folder(const std::string& root, const ClassScheme& scheme,
                      std::vector<std::string>* warnings = nullptr);

/// Reads a CSV with header `id_code,diagnosis`, diagnosis in 0..4. Image
/// paths are image_dir/<id_code><extension> and must exist. Binary mode
/// collapses diagnosis to min(diagnosis, 1). Errors cite the CSV line.
Dataset ingest_manifest(const std::string& csv_path, const std::string& image_dir,
                        const ClassScheme& scheme, const std::string& extension = ".pgm");

/// Per class c: test count = round((1-train_ratio) * n_c) half-up, chosen by
/// a seeded shuffle of that class's indices; the rest train. Both lists come
/// back sorted, so dataset order is preserved within each side. Every class
/// in the scheme needs at least 2 items.
SplitIndices stratified_split(const Dataset& ds, double train_ratio, std::uint64_t seed);

/// Loads every image, resizes to target_w x target_h and rescales to [0,1];
/// row i of the matrix is item i. With to_gray the luminance is taken first
/// and the resize runs on the single channel; otherwise all images must share
/// one channel count.
FeatureSet flatten(const Dataset& ds, int target_w, int target_h, bool to_gray = false);

/// flatten restricted to the items at the given indices (in index order).
FeatureSet flatten_subset(const Dataset& ds, const std::vector<std::size_t>& indices,
                          int target_w, int target_h, bool to_gray = false);

}  // namespace fundus
