#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ailurus/grid.hpp"

namespace ailurus {

// 8-bit raster, channels = 1 (PGM, P5) or 3 (PPM, P6).
struct Image {
    int height = 0;
    int width = 0;
    int channels = 0;
    std::vector<std::uint8_t> pixels;  // row-major, interleaved
};

Image load_image(const std::string& path);
void save_image(const Image& img, const std::string& path);

// Non-overlapping p x p patches flattened to D = channels * p * p
// feature vectors, pixel values scaled to [0, 1]. Image dimensions
// must be multiples of p.
TokenGrid patchify(const Image& img, int patch);

// Inverse of patchify; values clamped to [0, 255].
Image unpatchify(const TokenGrid& grid, int patch, int channels);

}  // namespace ailurus
