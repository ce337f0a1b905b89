#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace ailurus {

// Per-token lists of the lambda spatially nearest tokens, ordered by
// ascending Euclidean distance on (row, col) coordinates, ties broken
// by ascending row-major token index. The 1-based spatial rank of an
// entry is its list position + 1.
struct NeighborIndex {
    int lambda = 0;       // requested neighbor count
    int per_token = 0;    // actual list length, min(lambda, N-1)
    std::vector<std::int32_t> flat;  // tokens() * per_token indices

    std::span<const std::int32_t> list(int i) const {
        return {flat.data() + static_cast<std::size_t>(i) * per_token,
                static_cast<std::size_t>(per_token)};
    }
};

// Throws std::invalid_argument "grid too small" when h*w < 2.
NeighborIndex spatial_neighbors(int h, int w, int lambda, int threads = 0);

}  // namespace ailurus
