#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "fundus/features.hpp"

namespace fundus {

/// Oversampling parameters. Empty targets means balance every class up to
/// the largest class; explicit targets are per-class row counts and must not
/// be below the current counts.
struct SmoteParams {
    int k = 5;
    std::vector<std::size_t> targets;
    std::uint64_t seed = 0;
};

/// How one synthetic row was made: row = X[base] + lambda * (X[neighbor] - X[base]).
struct SmoteProvenance {
    std::size_t base = 0;
    std::size_t neighbor = 0;
    double lambda = 0.0;
};

struct SmoteResult {
    FeatureMatrix features;
    std::vector<int> labels;
    /// One entry per synthetic row, in output order (synthetic row j is
    /// features row original_count + j).
    std::vector<SmoteProvenance> provenance;
};

/// For each member of the class (ascending global row index), the global row
/// indices of its k nearest same-class members by Euclidean distance. Self
/// is excluded, distance ties break toward the lower index, and k is
/// truncated to class size - 1.
std::vector<std::vector<std::size_t>> knn_minority(const FeatureMatrix& X,
                                                   const std::vector<int>& labels,
                                                   int class_id, int k);

/// x + lambda * (x_nn - x), componentwise.
std::vector<double> synthesize(const std::vector<double>& x, const std::vector<double>& x_nn,
                               double lambda);

/// Appends synthetic rows per minority class until each class reaches its
/// target. Bases cycle through the class members in seeded shuffled order;
/// each synthetic row picks a uniformly random entry of its base's neighbor
/// list and a uniform lambda in [0,1). Original rows are an unchanged prefix
/// of the output. Classes are processed in ascending id order, each with its
/// own derived RNG stream.
SmoteResult smote(const FeatureMatrix& X, const std::vector<int>& labels,
                  const SmoteParams& params);

/// CSV audit trail (header base,neighbor,lambda), lambda printed so it reads
/// back bit-for-bit.
void save_provenance(const std::vector<SmoteProvenance>& provenance, const std::string& path);
std::vector<SmoteProvenance> load_provenance(const std::string& path);

}  // namespace fundus
