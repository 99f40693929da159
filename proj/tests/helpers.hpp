#pragma once

// Shared test fixtures: scratch directories and synthetic disc datasets.

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "fundus/features.hpp"
#include "fundus/image.hpp"
#include "fundus/pnm.hpp"
#include "fundus/rng.hpp"

namespace testutil {

/// Scratch directory, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("fundus_" + tag + "_" + std::to_string(::getpid()) + "_" +
                 std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::string str(const std::string& rel = "") const {
        return rel.empty() ? path_.string() : (path_ / rel).string();
    }

private:
    std::filesystem::path path_;
};

/// Synthetic disc image knobs. Class c puts a disc of radius
/// base_radius + c * radius_step at horizontal position
/// (center_x_frac + c * center_step_frac) * width.
struct BlobParams {
    int width = 32;
    int height = 32;
    double base_radius = 5.0;
    double radius_step = 4.0;
    double center_x_frac = 0.35;
    double center_step_frac = 0.30;
    double jitter = 1.5;
    double noise = 12.0;
    int background = 40;
    int foreground = 200;
};

inline fundus::Image blob_image(const BlobParams& p, int cls, fundus::Rng& rng) {
    const double cx = p.center_x_frac * p.width + cls * p.center_step_frac * p.width +
                      rng.uniform(-p.jitter, p.jitter);
    const double cy = 0.5 * p.height + rng.uniform(-p.jitter, p.jitter);
    const double radius = p.base_radius + cls * p.radius_step +
                          rng.uniform(-0.5, 0.5);
    fundus::Image img(p.width, p.height, 1);
    for (int y = 0; y < p.height; ++y) {
        for (int x = 0; x < p.width; ++x) {
            const double dx = x - cx;
            const double dy = y - cy;
            const bool inside = dx * dx + dy * dy <= radius * radius;
            double v = (inside ? p.foreground : p.background) +
                       rng.uniform(-p.noise, p.noise);
            img.at(x, y) = static_cast<std::uint8_t>(
                std::clamp(std::lround(v), 0L, 255L));
        }
    }
    return img;
}

/// Writes counts[c] disc images per class under root/<classes[c]>/, numbered
/// so lexicographic order equals generation order.
inline void write_blob_tree(const std::filesystem::path& root,
                            const std::vector<std::string>& classes,
                            const std::vector<int>& counts, const BlobParams& p,
                            std::uint64_t seed) {
    fundus::Rng rng(seed);
    for (std::size_t c = 0; c < classes.size(); ++c) {
        const auto dir = root / classes[c];
        std::filesystem::create_directories(dir);
        for (int i = 0; i < counts[c]; ++i) {
            char name[32];
            std::snprintf(name, sizeof(name), "img_%04d.pgm", i);
            fundus::save_image(blob_image(p, static_cast<int>(c), rng), dir / name);
        }
    }
}

/// Linearly separable 2-class feature set: class 0 lights the top-left
/// quadrant, class 1 the bottom-right, plus small uniform noise.
inline fundus::FeatureSet quadrant_features(int per_class, int w, int h,
                                            std::uint64_t seed) {
    fundus::Rng rng(seed);
    fundus::FeatureSet set;
    set.image_width = w;
    set.image_height = h;
    set.image_channels = 1;
    set.num_classes = 2;
    set.features = fundus::FeatureMatrix(2 * static_cast<std::size_t>(per_class),
                                         static_cast<std::size_t>(w) * h);
    for (int cls = 0; cls < 2; ++cls) {
        for (int i = 0; i < per_class; ++i) {
            const std::size_t row = static_cast<std::size_t>(cls) * per_class + i;
            double* out = set.features.row(row);
            for (int y = 0; y < h; ++y) {
                for (int x = 0; x < w; ++x) {
                    const bool lit = cls == 0 ? (x < w / 2 && y < h / 2)
                                              : (x >= w / 2 && y >= h / 2);
                    double v = (lit ? 0.8 : 0.15) + rng.uniform(-0.05, 0.05);
                    out[static_cast<std::size_t>(y) * w + x] = std::clamp(v, 0.0, 1.0);
                }
            }
            set.labels.push_back(cls);
        }
    }
    return set;
}

/// FeatureMatrix from row literals.
inline fundus::FeatureMatrix matrix_of(const std::vector<std::vector<double>>& rows) {
    fundus::FeatureMatrix m(rows.size(), rows.empty() ? 0 : rows[0].size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t c = 0; c < rows[r].size(); ++c) m.at(r, c) = rows[r][c];
    }
    return m;
}

}  // namespace testutil
