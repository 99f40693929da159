#include "fundus/features.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace fundus {

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw std::runtime_error(path + ": " + what);
}

}  // namespace

void save_features(const FeatureSet& set, const std::string& path) {
    if (set.features.rows != set.labels.size()) {
        fail(path, "feature rows and label count differ");
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(path, "cannot open for writing");

    out << "FEATURES 1\n";
    out << set.features.rows << ' ' << set.features.cols << ' ' << set.image_width << ' '
        << set.image_height << ' ' << set.image_channels << ' ' << set.num_classes << '\n';

    char buf[64];
    for (std::size_t r = 0; r < set.features.rows; ++r) {
        out << set.labels[r];
        const double* row = set.features.row(r);
        for (std::size_t c = 0; c < set.features.cols; ++c) {
            std::snprintf(buf, sizeof buf, " %.17g", row[c]);
            out << buf;
        }
        out << '\n';
    }
    if (!out) fail(path, "write failed");
}

FeatureSet load_features(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(path, "cannot open");

    std::string magic;
    int version = 0;
    if (!(in >> magic >> version) || magic != "FEATURES") {
        fail(path, "not a feature file (missing FEATURES header)");
    }
    if (version != 1) {
        fail(path, "unsupported feature file version " + std::to_string(version));
    }

    long long n = 0, d = 0;
    FeatureSet set;
    if (!(in >> n >> d >> set.image_width >> set.image_height >> set.image_channels >>
          set.num_classes)) {
        fail(path, "malformed header line");
    }
    if (n < 0 || d < 0 || set.num_classes < 1) {
        fail(path, "header values out of range");
    }
    const long long shape = static_cast<long long>(set.image_width) * set.image_height *
                            set.image_channels;
    if (shape != d) {
        fail(path, "image shape does not match feature dimension");
    }

    set.features = FeatureMatrix(static_cast<std::size_t>(n), static_cast<std::size_t>(d));
    set.labels.resize(static_cast<std::size_t>(n));
    for (long long r = 0; r < n; ++r) {
        int label = 0;
        if (!(in >> label)) fail(path, "truncated at sample " + std::to_string(r));
        if (label < 0 || label >= set.num_classes) {
            fail(path, "label " + std::to_string(label) + " out of range at sample " +
                           std::to_string(r));
        }
        set.labels[static_cast<std::size_t>(r)] = label;
        double* row = set.features.row(static_cast<std::size_t>(r));
        for (long long c = 0; c < d; ++c) {
            if (!(in >> row[c])) fail(path, "truncated at sample " + std::to_string(r));
        }
    }
    return set;
}

}  // namespace fundus
