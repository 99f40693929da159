#include "fundus/augment.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace fundus {

namespace {

// Mirror an index into [0, n-1] without repeating the edge pixel
// (..., 2, 1, 0 | 0', 1', 2', ... maps to ..., 2, 1, 0, 1, 2, ...).
int reflect_index(int i, int n) {
    if (n == 1) return 0;
    const int period = 2 * (n - 1);
    i = std::abs(i) % period;
    return i < n ? i : period - i;
}

std::uint8_t sample_bilinear_reflect(const Image& img, double sx, double sy, int c) {
    const int ix = static_cast<int>(std::floor(sx));
    const int iy = static_cast<int>(std::floor(sy));
    const double fx = sx - ix;
    const double fy = sy - iy;
    const int x0 = reflect_index(ix, img.width);
    const int x1 = reflect_index(ix + 1, img.width);
    const int y0 = reflect_index(iy, img.height);
    const int y1 = reflect_index(iy + 1, img.height);
    const double top = (1.0 - fx) * img.at(x0, y0, c) + fx * img.at(x1, y0, c);
    const double bot = (1.0 - fx) * img.at(x0, y1, c) + fx * img.at(x1, y1, c);
    const long v = std::lround((1.0 - fy) * top + fy * bot);
    return static_cast<std::uint8_t>(std::clamp(v, 0L, 255L));
}

}  // namespace

Image apply_affine(const Image& img, const AffineSpec& spec) {
    if (!img.valid()) {
        throw std::invalid_argument("apply_affine: invalid image");
    }
    if (spec.zoom <= 0.0) {
        throw std::invalid_argument("apply_affine: zoom must be > 0");
    }

    constexpr double deg = std::numbers::pi / 180.0;
    const double cs = std::cos(spec.rotation_deg * deg);
    const double sn = std::sin(spec.rotation_deg * deg);
    const double sh = std::tan(spec.shear_deg * deg);
    const double z = spec.zoom;

    // Forward map A = Rotation * Shear * Zoom about the image center,
    // followed by the pixel shift. Output pixels are pulled through A^-1.
    const double a00 = cs * z;
    const double a01 = z * (cs * sh - sn);
    const double a10 = sn * z;
    const double a11 = z * (sn * sh + cs);
    const double det = a00 * a11 - a01 * a10;
    const double i00 = a11 / det;
    const double i01 = -a01 / det;
    const double i10 = -a10 / det;
    const double i11 = a00 / det;

    const double cx = 0.5 * (img.width - 1);
    const double cy = 0.5 * (img.height - 1);
    const double shift_px = spec.shift_x * img.width;
    const double shift_py = spec.shift_y * img.height;

    Image out(img.width, img.height, img.channels);
    for (int oy = 0; oy < img.height; ++oy) {
        for (int ox = 0; ox < img.width; ++ox) {
            const int fx = spec.flip_h ? img.width - 1 - ox : ox;
            const double dx = fx - cx - shift_px;
            const double dy = oy - cy - shift_py;
            const double sx = i00 * dx + i01 * dy + cx;
            const double sy = i10 * dx + i11 * dy + cy;
            for (int c = 0; c < img.channels; ++c) {
                out.at(ox, oy, c) = sample_bilinear_reflect(img, sx, sy, c);
            }
        }
    }
    return out;
}

AffineSpec sample_spec(const AugmentPolicy& policy, Rng& rng) {
    if (policy.max_rotation_deg < 0 || policy.max_shift < 0 ||
        policy.max_zoom_delta < 0 || policy.max_shear_deg < 0) {
        throw std::invalid_argument("sample_spec: policy maxima must be >= 0");
    }
    AffineSpec spec;
    spec.rotation_deg = rng.uniform(-policy.max_rotation_deg, policy.max_rotation_deg);
    spec.shear_deg = rng.uniform(-policy.max_shear_deg, policy.max_shear_deg);
    spec.zoom = 1.0 + rng.uniform(-policy.max_zoom_delta, policy.max_zoom_delta);
    spec.shift_x = rng.uniform(-policy.max_shift, policy.max_shift);
    spec.shift_y = rng.uniform(-policy.max_shift, policy.max_shift);
    spec.flip_h = policy.allow_flip_h && rng.bernoulli(0.5);
    return spec;
}

std::vector<double> rescale_to_features(const Image& img) {
    if (!img.valid()) {
        throw std::invalid_argument("rescale_to_features: invalid image");
    }
    std::vector<double> features(img.pixels.size());
    for (std::size_t i = 0; i < img.pixels.size(); ++i) {
        features[i] = img.pixels[i] / 255.0;
    }
    return features;
}

Image features_to_image(const std::vector<double>& features, int width, int height,
                        int channels) {
    Image img(width, height, channels);
    if (features.size() != img.pixels.size()) {
        throw std::invalid_argument("features_to_image: feature length does not match shape");
    }
    for (std::size_t i = 0; i < features.size(); ++i) {
        img.pixels[i] =
            static_cast<std::uint8_t>(std::clamp(std::lround(features[i] * 255.0), 0L, 255L));
    }
    return img;
}

}  // namespace fundus
