#include "fundus/image.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace fundus {

namespace {

std::uint8_t clamp_byte(long v) {
    return static_cast<std::uint8_t>(std::clamp(v, 0L, 255L));
}

void require_valid(const Image& img, const char* where) {
    if (!img.valid()) {
        throw std::invalid_argument(std::string(where) + ": invalid image");
    }
}

}  // namespace

Plane extract_luma(const Image& img) {
    require_valid(img, "extract_luma");
    Plane luma(img.width, img.height);
    if (img.channels == 1) {
        luma.values = img.pixels;
        return luma;
    }
    for (std::size_t p = 0; p < img.pixel_count(); ++p) {
        const double r = img.pixels[p * 3 + 0];
        const double g = img.pixels[p * 3 + 1];
        const double b = img.pixels[p * 3 + 2];
        luma.values[p] = clamp_byte(std::lround(0.299 * r + 0.587 * g + 0.114 * b));
    }
    return luma;
}

Image recombine_luma(const Image& img, const Plane& new_luma) {
    require_valid(img, "recombine_luma");
    if (new_luma.width != img.width || new_luma.height != img.height) {
        throw std::invalid_argument(
            "recombine_luma: luma plane dimensions do not match image");
    }
    Image out = img;
    if (img.channels == 1) {
        out.pixels = new_luma.values;
        return out;
    }
    const Plane old_luma = extract_luma(img);
    for (std::size_t p = 0; p < img.pixel_count(); ++p) {
        const std::uint8_t old_y = old_luma.values[p];
        const std::uint8_t new_y = new_luma.values[p];
        if (old_y == 0) {
            out.pixels[p * 3 + 0] = new_y;
            out.pixels[p * 3 + 1] = new_y;
            out.pixels[p * 3 + 2] = new_y;
            continue;
        }
        const double ratio = static_cast<double>(new_y) / static_cast<double>(old_y);
        for (int c = 0; c < 3; ++c) {
            out.pixels[p * 3 + c] =
                clamp_byte(std::lround(img.pixels[p * 3 + c] * ratio));
        }
    }
    return out;
}

Image resize_bilinear(const Image& img, int out_w, int out_h) {
    require_valid(img, "resize_bilinear");
    if (out_w < 1 || out_h < 1) {
        throw std::invalid_argument("resize_bilinear: target dimensions must be >= 1");
    }
    Image out(out_w, out_h, img.channels);
    const double scale_x = static_cast<double>(img.width) / out_w;
    const double scale_y = static_cast<double>(img.height) / out_h;
    for (int oy = 0; oy < out_h; ++oy) {
        // Half-pixel centers, clamped at the borders.
        double sy = (oy + 0.5) * scale_y - 0.5;
        sy = std::clamp(sy, 0.0, static_cast<double>(img.height - 1));
        const int y0 = static_cast<int>(sy);
        const int y1 = std::min(y0 + 1, img.height - 1);
        const double fy = sy - y0;
        for (int ox = 0; ox < out_w; ++ox) {
            double sx = (ox + 0.5) * scale_x - 0.5;
            sx = std::clamp(sx, 0.0, static_cast<double>(img.width - 1));
            const int x0 = static_cast<int>(sx);
            const int x1 = std::min(x0 + 1, img.width - 1);
            const double fx = sx - x0;
            for (int c = 0; c < img.channels; ++c) {
                const double top = (1.0 - fx) * img.at(x0, y0, c) + fx * img.at(x1, y0, c);
                const double bot = (1.0 - fx) * img.at(x0, y1, c) + fx * img.at(x1, y1, c);
                out.at(ox, oy, c) = clamp_byte(std::lround((1.0 - fy) * top + fy * bot));
            }
        }
    }
    return out;
}

Plane resize_bilinear(const Plane& plane, int out_w, int out_h) {
    Image tmp(plane.width, plane.height, 1);
    tmp.pixels = plane.values;
    const Image resized = resize_bilinear(tmp, out_w, out_h);
    Plane out(out_w, out_h);
    out.values = resized.pixels;
    return out;
}

Image plane_to_image(const Plane& plane) {
    Image img(plane.width, plane.height, 1);
    img.pixels = plane.values;
    return img;
}

}  // namespace fundus
