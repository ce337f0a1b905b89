#include "ailurus/neighbors.hpp"

#include <algorithm>
#include <stdexcept>

#include "ailurus/parallel.hpp"

namespace ailurus {

NeighborIndex spatial_neighbors(int h, int w, int lambda, int threads) {
    if (lambda < 1) throw std::invalid_argument("lambda must be >= 1");
    const int n = h * w;
    if (n < 2) throw std::invalid_argument("grid too small");

    NeighborIndex idx;
    idx.lambda = lambda;
    idx.per_token = std::min(lambda, n - 1);
    idx.flat.resize(static_cast<std::size_t>(n) * idx.per_token);

    parallel_for(
        static_cast<std::size_t>(n),
        [&](std::size_t ti) {
            const int i = static_cast<int>(ti);
            const int ri = i / w, ci = i % w;
            // (squared spatial distance, token index) pairs; index is
            // the tie-breaker, so a plain pair sort gives the contract
            // ordering.
            std::vector<std::pair<std::int64_t, std::int32_t>> cand;
            cand.reserve(n - 1);
            for (int j = 0; j < n; ++j) {
                if (j == i) continue;
                const int rj = j / w, cj = j % w;
                const std::int64_t dr = ri - rj, dc = ci - cj;
                cand.emplace_back(dr * dr + dc * dc, j);
            }
            std::partial_sort(cand.begin(), cand.begin() + idx.per_token,
                              cand.end());
            auto* out = idx.flat.data() +
                        static_cast<std::size_t>(i) * idx.per_token;
            for (int r = 0; r < idx.per_token; ++r) out[r] = cand[r].second;
        },
        threads);
    return idx;
}

}  // namespace ailurus
