#include "fundus/clahe.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace fundus {

namespace {

struct TileGrid {
    int rows, cols;
    int height, width;

    int row_start(int r) const {
        return static_cast<int>(static_cast<std::int64_t>(r) * height / rows);
    }
    int row_end(int r) const { return row_start(r + 1); }
    int col_start(int c) const {
        return static_cast<int>(static_cast<std::int64_t>(c) * width / cols);
    }
    int col_end(int c) const { return col_start(c + 1); }

    double center_y(int r) const { return 0.5 * (row_start(r) + row_end(r) - 1); }
    double center_x(int c) const { return 0.5 * (col_start(c) + col_end(c) - 1); }
};

void validate(const Plane& plane, const ClaheParams& p) {
    if (plane.width < 1 || plane.height < 1 ||
        plane.values.size() != static_cast<std::size_t>(plane.width) * plane.height) {
        throw std::invalid_argument("clahe: invalid plane");
    }
    if (p.tile_rows < 1 || p.tile_cols < 1) {
        throw std::invalid_argument("clahe: tile grid must be at least 1x1");
    }
    if (p.tile_rows > plane.height || p.tile_cols > plane.width) {
        throw std::invalid_argument(
            "clahe: tile grid " + std::to_string(p.tile_rows) + "x" +
            std::to_string(p.tile_cols) + " larger than plane " +
            std::to_string(plane.height) + "x" + std::to_string(plane.width));
    }
    if (p.clip_factor < 1.0) {
        throw std::invalid_argument("clahe: clip_factor must be >= 1");
    }
}

std::vector<std::uint32_t> tile_histogram(const Plane& plane, const TileGrid& grid,
                                          int tr, int tc) {
    std::vector<std::uint32_t> hist(ClaheParams::kBins, 0);
    for (int y = grid.row_start(tr); y < grid.row_end(tr); ++y) {
        for (int x = grid.col_start(tc); x < grid.col_end(tc); ++x) {
            ++hist[plane.at(x, y)];
        }
    }
    return hist;
}

bool is_constant(const std::vector<std::uint32_t>& hist) {
    int nonzero = 0;
    for (std::uint32_t h : hist) {
        if (h > 0 && ++nonzero > 1) return false;
    }
    return true;
}

std::uint32_t clip_limit_for(double clip_factor, std::uint32_t tile_pixels) {
    const auto limit = static_cast<std::uint32_t>(
        clip_factor * static_cast<double>(tile_pixels) / 256.0);
    return std::max<std::uint32_t>(1, limit);
}

// Mapping of one tile: constant tiles keep the identity, everything else is
// clipped and equalized.
std::vector<std::uint8_t> tile_lut(const Plane& plane, const TileGrid& grid,
                                   double clip_factor, int tr, int tc) {
    std::vector<std::uint32_t> hist = tile_histogram(plane, grid, tr, tc);
    const auto tile_pixels = static_cast<std::uint32_t>(
        (grid.row_end(tr) - grid.row_start(tr)) *
        (grid.col_end(tc) - grid.col_start(tc)));
    if (is_constant(hist)) {
        return tile_mapping(hist, tile_pixels);
    }
    return tile_mapping(clip_histogram(std::move(hist), clip_limit_for(clip_factor, tile_pixels)),
                        tile_pixels);
}

// Index of the nearest tile center at or below `pos`, plus its successor and
// the blend weight. Positions beyond the outermost centers clamp to them.
struct BlendAxis {
    int lo, hi;
    double w;
};

template <class CenterFn>
BlendAxis blend_axis(double pos, int tiles, CenterFn center) {
    if (tiles == 1 || pos <= center(0)) return {0, 0, 0.0};
    if (pos >= center(tiles - 1)) return {tiles - 1, tiles - 1, 0.0};
    int lo = 0;
    while (lo + 1 < tiles && center(lo + 1) <= pos) ++lo;
    const int hi = lo + 1;
    const double w = (pos - center(lo)) / (center(hi) - center(lo));
    return {lo, hi, w};
}

std::uint8_t blend(double wy, double wx, double tl, double tr, double bl, double br) {
    const double v = (1.0 - wy) * ((1.0 - wx) * tl + wx * tr) +
                     wy * ((1.0 - wx) * bl + wx * br);
    return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

}  // namespace

std::vector<std::uint32_t> clip_histogram(std::vector<std::uint32_t> hist,
                                          std::uint32_t limit) {
    if (limit < 1) {
        throw std::invalid_argument("clip_histogram: limit must be >= 1");
    }
    const auto bins = static_cast<std::uint32_t>(hist.size());
    std::uint64_t excess = 0;
    for (auto& h : hist) {
        if (h > limit) {
            excess += h - limit;
            h = limit;
        }
    }
    const auto base = static_cast<std::uint32_t>(excess / bins);
    const auto remainder = static_cast<std::uint32_t>(excess % bins);
    for (std::uint32_t b = 0; b < bins; ++b) {
        hist[b] += base + (b < remainder ? 1 : 0);
    }
    return hist;
}

std::vector<std::uint8_t> tile_mapping(const std::vector<std::uint32_t>& hist,
                                       std::uint32_t tile_pixels) {
    const auto bins = static_cast<std::uint32_t>(hist.size());
    std::vector<std::uint8_t> lut(bins, 0);
    if (tile_pixels < 1) {
        throw std::invalid_argument("tile_mapping: tile_pixels must be >= 1");
    }

    std::uint32_t cdf_min = 0;
    std::uint64_t cdf = 0;
    for (std::uint32_t b = 0; b < bins; ++b) {
        cdf += hist[b];
        if (cdf_min == 0 && cdf > 0) cdf_min = static_cast<std::uint32_t>(cdf);
    }
    if (cdf != tile_pixels) {
        throw std::invalid_argument("tile_mapping: histogram total does not equal tile_pixels");
    }

    if (cdf_min == tile_pixels) {
        // Constant tile: identity map.
        for (std::uint32_t b = 0; b < bins; ++b) lut[b] = static_cast<std::uint8_t>(b);
        return lut;
    }

    const double denom = static_cast<double>(tile_pixels - cdf_min);
    const double scale = static_cast<double>(bins - 1);
    cdf = 0;
    for (std::uint32_t b = 0; b < bins; ++b) {
        cdf += hist[b];
        const double num = static_cast<double>(cdf) - static_cast<double>(cdf_min);
        const long mapped = std::lround(num / denom * scale);
        lut[b] = static_cast<std::uint8_t>(std::clamp(mapped, 0L, static_cast<long>(bins - 1)));
    }
    return lut;
}

Plane clahe(const Plane& plane, const ClaheParams& params) {
    validate(plane, params);
    const TileGrid grid{params.tile_rows, params.tile_cols, plane.height, plane.width};

    // One LUT per tile, computed once.
    std::vector<std::vector<std::uint8_t>> luts(
        static_cast<std::size_t>(grid.rows) * grid.cols);
    for (int tr = 0; tr < grid.rows; ++tr) {
        for (int tc = 0; tc < grid.cols; ++tc) {
            luts[static_cast<std::size_t>(tr) * grid.cols + tc] =
                tile_lut(plane, grid, params.clip_factor, tr, tc);
        }
    }

    std::vector<BlendAxis> col_axis(plane.width);
    for (int x = 0; x < plane.width; ++x) {
        col_axis[x] = blend_axis(static_cast<double>(x), grid.cols,
                                 [&](int c) { return grid.center_x(c); });
    }

    Plane out(plane.width, plane.height);
    for (int y = 0; y < plane.height; ++y) {
        const BlendAxis ry = blend_axis(static_cast<double>(y), grid.rows,
                                        [&](int r) { return grid.center_y(r); });
        const auto* lut_top_row = &luts[static_cast<std::size_t>(ry.lo) * grid.cols];
        const auto* lut_bot_row = &luts[static_cast<std::size_t>(ry.hi) * grid.cols];
        for (int x = 0; x < plane.width; ++x) {
            const BlendAxis& cx = col_axis[x];
            const std::uint8_t v = plane.at(x, y);
            out.at(x, y) = blend(ry.w, cx.w, lut_top_row[cx.lo][v], lut_top_row[cx.hi][v],
                                 lut_bot_row[cx.lo][v], lut_bot_row[cx.hi][v]);
        }
    }
    return out;
}

Plane clahe_reference(const Plane& plane, const ClaheParams& params) {
    validate(plane, params);
    const TileGrid grid{params.tile_rows, params.tile_cols, plane.height, plane.width};

    Plane out(plane.width, plane.height);
    for (int y = 0; y < plane.height; ++y) {
        for (int x = 0; x < plane.width; ++x) {
            const BlendAxis ry = blend_axis(static_cast<double>(y), grid.rows,
                                            [&](int r) { return grid.center_y(r); });
            const BlendAxis cx = blend_axis(static_cast<double>(x), grid.cols,
                                            [&](int c) { return grid.center_x(c); });
            const std::uint8_t v = plane.at(x, y);
            // Each of the four neighbor mappings is rebuilt from scratch for
            // every pixel; nothing is shared or cached.
            const double tl = tile_lut(plane, grid, params.clip_factor, ry.lo, cx.lo)[v];
            const double tr = tile_lut(plane, grid, params.clip_factor, ry.lo, cx.hi)[v];
            const double bl = tile_lut(plane, grid, params.clip_factor, ry.hi, cx.lo)[v];
            const double br = tile_lut(plane, grid, params.clip_factor, ry.hi, cx.hi)[v];
            out.at(x, y) = blend(ry.w, cx.w, tl, tr, bl, br);
        }
    }
    return out;
}

}  // namespace fundus
