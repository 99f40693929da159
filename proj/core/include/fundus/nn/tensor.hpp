#pragma once

#include <cstddef>
#include <vector>

namespace fundus {

/// Row-major value block with an explicit shape. Layers interpret the shape
/// as (channels, height, width) until Flatten, then as a single dimension.
struct Tensor {
    std::vector<int> shape;
    std::vector<double> data;

    Tensor() = default;
    explicit Tensor(std::vector<int> s) : shape(std::move(s)) {
        std::size_t n = 1;
        for (const int d : shape) n *= static_cast<std::size_t>(d);
        data.assign(n, 0.0);
    }

    std::size_t size() const { return data.size(); }
};

/// Packs one row-major channel-interleaved feature row (the flatten layout)
/// into a (channels, height, width) tensor.
Tensor row_to_tensor(const double* row, int width, int height, int channels);

}  // namespace fundus
