#pragma once

#include <cstdint>
#include <vector>

#include "fundus/image.hpp"
#include "fundus/rng.hpp"

namespace fundus {

/// One concrete geometric transform. The identity is rotation 0, shear 0,
/// zoom 1, shifts 0, no flip.
struct AffineSpec {
    double rotation_deg = 0.0;
    double shear_deg = 0.0;
    double zoom = 1.0;  // scale factor applied to both axes, > 0
    double shift_x = 0.0;  // fraction of width, positive moves content right
    double shift_y = 0.0;  // fraction of height, positive moves content down
    bool flip_h = false;
};

/// Sampling ranges for random augmentation. Each field bounds a uniform
/// draw in [-max, +max]; zoom is drawn as 1 + uniform(-delta, +delta).
struct AugmentPolicy {
    double max_rotation_deg = 15.0;
    double max_shift = 0.10;
    double max_zoom_delta = 0.10;
    double max_shear_deg = 10.0;
    bool allow_flip_h = true;
    std::uint64_t seed = 0;
};

/// Applies the transform by inverse mapping about the image center with
/// bilinear sampling. Out-of-bounds samples reflect across the border
/// (mirror without repeating the edge pixel). Output dimensions equal the
/// input's.
Image apply_affine(const Image& img, const AffineSpec& spec);

/// Draws one AffineSpec from the policy. Draw order is fixed (rotation,
/// shear, zoom, shift_x, shift_y, flip) so identical generator states yield
/// identical specs.
AffineSpec sample_spec(const AugmentPolicy& policy, Rng& rng);

/// Intensities divided by 255 into [0,1], flattened row-major with the
/// channel-interleaved order preserved.
std::vector<double> rescale_to_features(const Image& img);

/// Inverse of rescale_to_features up to rounding: values * 255, rounded and
/// clamped back into an 8-bit image of the given shape.
Image features_to_image(const std::vector<double>& features, int width, int height,
                        int channels);

}  // namespace fundus
