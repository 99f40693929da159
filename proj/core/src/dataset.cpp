#include "fundus/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <stdexcept>

#include "fundus/augment.hpp"
#include "fundus/image.hpp"
#include "fundus/pnm.hpp"
#include "fundus/rng.hpp"

namespace fs = std::filesystem;

namespace fundus {

ClassScheme ClassScheme::binary_scheme() {
    return {ClassMode::binary, {"No_DR", "DR"}};
}

ClassScheme ClassScheme::multiclass_scheme() {
    return {ClassMode::multiclass, {"No_DR", "Mild", "Moderate", "Severe", "Proliferate_DR"}};
}

std::vector<std::size_t> Dataset::class_counts() const {
    std::vector<std::size_t> counts(scheme.names.size(), 0);
    for (const auto& item : items) counts[static_cast<std::size_t>(item.label)]++;
    return counts;
}

Dataset ingest_folder(const std::string& root, const ClassScheme& scheme,
                      std::vector<std::string>* warnings) {
    if (!fs::is_directory(root)) {
        throw std::runtime_error(root + ": not a directory");
    }

    const std::set<std::string> known(scheme.names.begin(), scheme.names.end());
    for (const auto& entry : fs::directory_iterator(root)) {
        const std::string name = entry.path().filename().string();
        if (!entry.is_directory()) {
            throw std::runtime_error(root + ": unexpected non-directory entry '" + name + "'");
        }
        if (!known.count(name)) {
            throw std::runtime_error(root + ": unknown class folder '" + name + "'");
        }
    }

    Dataset ds;
    ds.scheme = scheme;
    for (std::size_t k = 0; k < scheme.names.size(); ++k) {
        const fs::path dir = fs::path(root) / scheme.names[k];
        std::vector<std::string> files;
        if (fs::is_directory(dir)) {
            for (const auto& entry : fs::directory_iterator(dir)) {
                if (!entry.is_regular_file()) {
                    throw std::runtime_error(dir.string() + ": unexpected non-file entry '" +
                                             entry.path().filename().string() + "'");
                }
                files.push_back(entry.path().string());
            }
        }
        std::sort(files.begin(), files.end());
        if (files.empty() && warnings) {
            warnings->push_back("class folder '" + scheme.names[k] + "' is missing or empty");
        }
        for (auto& file : files) {
            ds.items.push_back({std::move(file), static_cast<int>(k)});
        }
    }
    return ds;
}

namespace {

// Strips one trailing carriage return so CRLF manifests parse like LF ones.
void chomp(std::string& line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
}

}  // namespace

Dataset ingest_manifest(const std::string& csv_path, const std::string& image_dir,
                        const ClassScheme& scheme, const std::string& extension) {
    std::ifstream in(csv_path, std::ios::binary);
    if (!in) throw std::runtime_error(csv_path + ": cannot open");

    std::string line;
    if (!std::getline(in, line)) {
        throw std::runtime_error(csv_path + ": empty file, expected header id_code,diagnosis");
    }
    chomp(line);
    if (line != "id_code,diagnosis") {
        throw std::runtime_error(csv_path + ": bad header '" + line +
                                 "', expected id_code,diagnosis");
    }

    Dataset ds;
    ds.scheme = scheme;
    for (int line_no = 2; std::getline(in, line); ++line_no) {
        chomp(line);
        if (line.empty()) continue;
        const std::string where = csv_path + ":" + std::to_string(line_no);

        const auto comma = line.find(',');
        if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos) {
            throw std::runtime_error(where + ": expected exactly two columns");
        }
        const std::string id = line.substr(0, comma);
        const std::string diag_str = line.substr(comma + 1);
        if (id.empty()) throw std::runtime_error(where + ": empty id_code");
        if (diag_str.empty() ||
            diag_str.find_first_not_of("0123456789") != std::string::npos) {
            throw std::runtime_error(where + ": diagnosis '" + diag_str + "' is not an integer");
        }
        const int diagnosis = std::stoi(diag_str);
        if (diagnosis > 4) {
            throw std::runtime_error(where + ": diagnosis " + std::to_string(diagnosis) +
                                     " out of range 0..4");
        }

        const fs::path img = fs::path(image_dir) / (id + extension);
        if (!fs::is_regular_file(img)) {
            throw std::runtime_error(where + ": image file not found: " + img.string());
        }
        const int label = scheme.mode == ClassMode::binary ? std::min(diagnosis, 1) : diagnosis;
        ds.items.push_back({img.string(), label});
    }
    return ds;
}

SplitIndices stratified_split(const Dataset& ds, double train_ratio, std::uint64_t seed) {
    if (!(train_ratio > 0.0 && train_ratio < 1.0)) {
        throw std::invalid_argument("stratified_split: train_ratio must be in (0,1)");
    }

    std::vector<std::vector<std::size_t>> by_class(ds.scheme.names.size());
    for (std::size_t i = 0; i < ds.items.size(); ++i) {
        by_class[static_cast<std::size_t>(ds.items[i].label)].push_back(i);
    }

    SplitIndices split;
    for (std::size_t c = 0; c < by_class.size(); ++c) {
        auto& members = by_class[c];
        if (members.size() < 2) {
            throw std::runtime_error("stratified_split: class '" + ds.scheme.names[c] +
                                     "' has " + std::to_string(members.size()) +
                                     " item(s), need at least 2");
        }
        const double want = (1.0 - train_ratio) * static_cast<double>(members.size());
        const auto test_c = static_cast<std::size_t>(std::floor(want + 0.5));

        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(c)));
        rng.shuffle(members.begin(), members.end());
        split.test.insert(split.test.end(), members.begin(), members.begin() + test_c);
        split.train.insert(split.train.end(), members.begin() + test_c, members.end());
    }
    std::sort(split.train.begin(), split.train.end());
    std::sort(split.test.begin(), split.test.end());
    return split;
}

FeatureSet flatten_subset(const Dataset& ds, const std::vector<std::size_t>& indices,
                          int target_w, int target_h, bool to_gray) {
    if (target_w < 1 || target_h < 1) {
        throw std::invalid_argument("flatten: target dimensions must be >= 1");
    }

    FeatureSet set;
    set.image_width = target_w;
    set.image_height = target_h;
    set.num_classes = ds.scheme.num_classes();
    set.labels.reserve(indices.size());

    int channels = 0;
    std::vector<std::vector<double>> rows;
    rows.reserve(indices.size());
    for (const std::size_t i : indices) {
        const auto& item = ds.items.at(i);
        Image img = load_image(item.path);
        if (to_gray) {
            img = plane_to_image(extract_luma(img));
        }
        if (channels == 0) {
            channels = img.channels;
        } else if (img.channels != channels) {
            throw std::runtime_error(item.path + ": channel count " +
                                     std::to_string(img.channels) +
                                     " differs from earlier images (" +
                                     std::to_string(channels) + ")");
        }
        rows.push_back(rescale_to_features(resize_bilinear(img, target_w, target_h)));
        set.labels.push_back(item.label);
    }

    set.image_channels = channels == 0 ? 1 : channels;
    const std::size_t dim = static_cast<std::size_t>(target_w) * target_h * set.image_channels;
    set.features = FeatureMatrix(rows.size(), dim);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        std::copy(rows[r].begin(), rows[r].end(), set.features.row(r));
    }
    return set;
}

FeatureSet flatten(const Dataset& ds, int target_w, int target_h, bool to_gray) {
    std::vector<std::size_t> all(ds.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    return flatten_subset(ds, all, target_w, target_h, to_gray);
}

}  // namespace fundus
