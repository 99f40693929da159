#pragma once

#include <filesystem>

#include "fundus/image.hpp"

namespace fundus {

/// Loads a binary PGM (P5, grayscale) or PPM (P6, RGB) file. The max value
/// must be 255. Throws std::runtime_error with a descriptive message on a
/// missing file, malformed header, unsupported max value, or truncated
/// pixel data.
Image load_image(const std::filesystem::path& path);

/// Saves an image as binary PGM (1 channel) or PPM (3 channels). A save
/// followed by a load reproduces the image bit-exactly.
void save_image(const Image& img, const std::filesystem::path& path);

}  // namespace fundus
