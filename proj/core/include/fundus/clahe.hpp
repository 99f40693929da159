#pragma once

#include <cstdint>
#include <vector>

#include "fundus/image.hpp"

namespace fundus {

/// Contrast-limited adaptive histogram equalization parameters.
/// The clip limit is expressed as a factor over the uniform bin height:
/// limit = max(1, floor(clip_factor * tile_pixels / 256)).
struct ClaheParams {
    int tile_rows = 8;
    int tile_cols = 8;
    double clip_factor = 2.0;

    static constexpr int kBins = 256;
};

/// Clips every bin above `limit` and redistributes the excess in a single
/// pass: floor(excess/bins) to every bin, plus one to each of the first
/// (excess mod bins) bins. The histogram total is preserved exactly; bins
/// may end slightly above the limit.
std::vector<std::uint32_t> clip_histogram(std::vector<std::uint32_t> hist,
                                          std::uint32_t limit);

/// Equalization lookup table for one tile. With B bins and cdf_min the
/// smallest nonzero cdf value:
///   T(v) = round((cdf(v) - cdf_min) / (tile_pixels - cdf_min) * (B-1))
/// clamped to [0, B-1]. A constant tile (cdf_min == tile_pixels) maps to
/// the identity so flat regions pass through unchanged.
std::vector<std::uint8_t> tile_mapping(const std::vector<std::uint32_t>& hist,
                                       std::uint32_t tile_pixels);

/// CLAHE over a luminance plane. The plane is partitioned into a near-equal
/// tile grid (row r spans floor(r*H/rows) .. floor((r+1)*H/rows)), each tile
/// gets a clipped equalization mapping, and every output pixel bilinearly
/// blends the mappings of its up-to-4 nearest tile centers. Pixels beyond
/// the outermost tile centers use the nearest tiles. Constant tiles keep
/// the identity mapping, so constant planes are fixed points.
Plane clahe(const Plane& plane, const ClaheParams& params);

/// Brute-force CLAHE used as a test oracle: recomputes every tile histogram
/// and mapping from scratch for every output pixel, with no caching of any
/// kind. Byte-identical to clahe() by contract.
Plane clahe_reference(const Plane& plane, const ClaheParams& params);

}  // namespace fundus
