#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace fundus {

/// Dense row-major matrix of per-sample feature vectors.
struct FeatureMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    FeatureMatrix() = default;
    FeatureMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

    double* row(std::size_t r) { return data.data() + r * cols; }
    const double* row(std::size_t r) const { return data.data() + r * cols; }

    double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

/// Labeled feature vectors plus the image shape they were flattened from.
/// Labels are class indices in [0, num_classes).
struct FeatureSet {
    FeatureMatrix features;
    std::vector<int> labels;
    int image_width = 0;
    int image_height = 0;
    int image_channels = 1;
    int num_classes = 0;

    std::size_t size() const { return labels.size(); }
};

/// Writes a feature set as text:
///
///   FEATURES 1
///   <n> <d> <width> <height> <channels> <classes>
///   <label> <v0> <v1> ... per sample
///
/// Values are printed with enough digits that load_features reproduces every
/// double bit-for-bit.
void save_features(const FeatureSet& set, const std::string& path);

/// Reads the format written by save_features. Throws std::runtime_error with
/// the offending path (and line, where known) on malformed input.
FeatureSet load_features(const std::string& path);

}  // namespace fundus
