#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace ailurus {

// An h x w grid of D-dimensional token feature vectors, row-major
// (token-major, then channel). This is the ViT patch-token sequence
// with its spatial layout retained.
struct TokenGrid {
    int height = 0;
    int width = 0;
    int dim = 0;
    std::vector<float> data;  // height*width*dim floats

    int tokens() const { return height * width; }

    std::span<const float> token(int i) const {
        return {data.data() + static_cast<std::size_t>(i) * dim,
                static_cast<std::size_t>(dim)};
    }
    std::span<float> token(int i) {
        return {data.data() + static_cast<std::size_t>(i) * dim,
                static_cast<std::size_t>(dim)};
    }

    // Throws std::invalid_argument on bad shape or non-finite values.
    void validate() const;
};

enum class SynthKind { Blocks, Gradient, Random };

struct SynthParams {
    int blocks = 4;        // block count G for SynthKind::Blocks
    float noise = 0.0f;    // per-token noise amplitude epsilon
};

SynthKind synth_kind_from_string(const std::string& s);

// Deterministic synthetic grids for testing and benchmarks.
//  blocks:   G rectangular tiles of identical vectors, plus optional
//            uniform noise in [-eps, eps]. G must tile h x w.
//  gradient: interpolates two seeded random vectors across columns.
//  random:   i.i.d. standard normal.
TokenGrid synth_grid(SynthKind kind, int h, int w, int dim,
                     const SynthParams& params, std::uint64_t seed);

// Grid file format: NAME.json sidecar header
//   {"height":h,"width":w,"dim":D,"dtype":"f32le"}
// plus NAME.bin of exactly h*w*D little-endian f32, token-major.
// `path` is the NAME stem (without extension).
void save_grid(const TokenGrid& grid, const std::string& path);
TokenGrid load_grid(const std::string& path);

}  // namespace ailurus
