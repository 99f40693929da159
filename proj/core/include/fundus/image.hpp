#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace fundus {

/// 8-bit raster image. Pixels are row-major and channel-interleaved:
/// pixel (x,y) channel c sits at index (y*width + x)*channels + c.
/// channels is 1 (grayscale) or 3 (RGB).
struct Image {
    int width = 0;
    int height = 0;
    int channels = 1;
    std::vector<std::uint8_t> pixels;

    Image() = default;
    Image(int w, int h, int c)
        : width(w), height(h), channels(c),
          pixels(static_cast<std::size_t>(w) * h * c, 0) {}

    std::uint8_t& at(int x, int y, int c = 0) {
        return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    std::uint8_t at(int x, int y, int c = 0) const {
        return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }

    std::size_t pixel_count() const {
        return static_cast<std::size_t>(width) * height;
    }

    bool valid() const {
        return width >= 1 && height >= 1 && (channels == 1 || channels == 3) &&
               pixels.size() == pixel_count() * channels;
    }
};

/// Single 8-bit channel, row-major. The luminance component of an Image.
struct Plane {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> values;

    Plane() = default;
    Plane(int w, int h)
        : width(w), height(h), values(static_cast<std::size_t>(w) * h, 0) {}

    std::uint8_t& at(int x, int y) {
        return values[static_cast<std::size_t>(y) * width + x];
    }
    std::uint8_t at(int x, int y) const {
        return values[static_cast<std::size_t>(y) * width + x];
    }
};

/// Luminance of an image. Grayscale images copy through unchanged; RGB uses
/// the Rec. 601 weights Y = round(0.299 R + 0.587 G + 0.114 B).
Plane extract_luma(const Image& img);

/// Replaces the luminance of an image. Grayscale pixels become new_luma
/// directly. For RGB each channel is scaled by newY/oldY per pixel (clamped
/// to [0,255]); pixels whose old luminance is 0 become (newY,newY,newY).
Image recombine_luma(const Image& img, const Plane& new_luma);

/// Bilinear resize with half-pixel-aligned sample centers. Resizing to the
/// input dimensions reproduces the image exactly.
Image resize_bilinear(const Image& img, int out_w, int out_h);
Plane resize_bilinear(const Plane& plane, int out_w, int out_h);

/// Wraps a plane as a 1-channel image (copies the values).
Image plane_to_image(const Plane& plane);

}  // namespace fundus
