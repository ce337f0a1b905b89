#include "ailurus/grid.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <stdexcept>

#include <json.hpp>

#include "ailurus/io_util.hpp"

namespace ailurus {

void TokenGrid::validate() const {
    if (height < 1 || width < 1 || dim < 1)
        throw std::invalid_argument("invalid dimensions");
    if (data.size() != static_cast<std::size_t>(height) * width * dim)
        throw std::invalid_argument("data length does not match h*w*dim");
    for (float v : data)
        if (!std::isfinite(v))
            throw std::invalid_argument("non-finite value in grid");
}

SynthKind synth_kind_from_string(const std::string& s) {
    if (s == "blocks") return SynthKind::Blocks;
    if (s == "gradient") return SynthKind::Gradient;
    if (s == "random") return SynthKind::Random;
    throw std::invalid_argument("unknown synth kind: " + s);
}

namespace {

// Splits G into gh x gw tiles with gh | h and gw | w, preferring the
// most square tile shape. Throws if no factorization tiles the grid.
std::pair<int, int> block_layout(int h, int w, int g) {
    int best_gh = -1, best_gw = -1;
    long best_score = -1;
    for (int gh = 1; gh <= g; ++gh) {
        if (g % gh != 0) continue;
        int gw = g / gh;
        if (h % gh != 0 || w % gw != 0) continue;
        long th = h / gh, tw = w / gw;
        long score = std::labs(th - tw);
        if (best_gh < 0 || score < best_score) {
            best_gh = gh;
            best_gw = gw;
            best_score = score;
        }
    }
    if (best_gh < 0)
        throw std::invalid_argument("block count does not tile the grid");
    return {best_gh, best_gw};
}

}  // namespace

TokenGrid synth_grid(SynthKind kind, int h, int w, int dim,
                     const SynthParams& params, std::uint64_t seed) {
    if (h < 1 || w < 1 || dim < 1)
        throw std::invalid_argument("invalid dimensions");
    TokenGrid grid;
    grid.height = h;
    grid.width = w;
    grid.dim = dim;
    grid.data.resize(static_cast<std::size_t>(h) * w * dim);
    std::mt19937_64 rng(seed);
    std::normal_distribution<float> normal(0.0f, 1.0f);

    switch (kind) {
        case SynthKind::Blocks: {
            auto [gh, gw] = block_layout(h, w, params.blocks);
            int th = h / gh, tw = w / gw;
            std::vector<float> protos(
                static_cast<std::size_t>(params.blocks) * dim);
            for (auto& v : protos) v = normal(rng);
            for (int r = 0; r < h; ++r) {
                for (int c = 0; c < w; ++c) {
                    int block = (r / th) * gw + (c / tw);
                    auto dst = grid.token(r * w + c);
                    const float* src = protos.data() +
                                       static_cast<std::size_t>(block) * dim;
                    for (int d = 0; d < dim; ++d) dst[d] = src[d];
                }
            }
            if (params.noise > 0.0f) {
                std::uniform_real_distribution<float> uni(-params.noise,
                                                          params.noise);
                for (auto& v : grid.data) v += uni(rng);
            }
            break;
        }
        case SynthKind::Gradient: {
            std::vector<float> a(dim), b(dim);
            for (auto& v : a) v = normal(rng);
            for (auto& v : b) v = normal(rng);
            for (int r = 0; r < h; ++r) {
                for (int c = 0; c < w; ++c) {
                    float t = (w == 1) ? 0.0f
                                       : static_cast<float>(c) / (w - 1);
                    auto dst = grid.token(r * w + c);
                    for (int d = 0; d < dim; ++d)
                        dst[d] = (1.0f - t) * a[d] + t * b[d];
                }
            }
            break;
        }
        case SynthKind::Random:
            for (auto& v : grid.data) v = normal(rng);
            break;
    }
    return grid;
}

void save_grid(const TokenGrid& grid, const std::string& path) {
    grid.validate();
    nlohmann::json header = {{"height", grid.height},
                             {"width", grid.width},
                             {"dim", grid.dim},
                             {"dtype", "f32le"}};
    write_file_atomic(path + ".json", header.dump() + "\n");
    write_file_atomic(
        path + ".bin",
        std::string_view(reinterpret_cast<const char*>(grid.data.data()),
                         grid.data.size() * sizeof(float)));
}

TokenGrid load_grid(const std::string& path) {
    std::ifstream hf(path + ".json");
    if (!hf) throw std::runtime_error("cannot open header: " + path + ".json");
    nlohmann::json header = nlohmann::json::parse(hf);
    TokenGrid grid;
    grid.height = header.at("height").get<int>();
    grid.width = header.at("width").get<int>();
    grid.dim = header.at("dim").get<int>();
    if (header.at("dtype").get<std::string>() != "f32le")
        throw std::runtime_error("unsupported dtype");
    if (grid.height < 1 || grid.width < 1 || grid.dim < 1)
        throw std::runtime_error("invalid dimensions");

    std::ifstream bf(path + ".bin", std::ios::binary);
    if (!bf) throw std::runtime_error("cannot open payload: " + path + ".bin");
    std::size_t count =
        static_cast<std::size_t>(grid.height) * grid.width * grid.dim;
    grid.data.resize(count);
    bf.read(reinterpret_cast<char*>(grid.data.data()),
            static_cast<std::streamsize>(count * sizeof(float)));
    if (static_cast<std::size_t>(bf.gcount()) != count * sizeof(float))
        throw std::runtime_error("truncated payload");
    bf.peek();
    if (!bf.eof()) throw std::runtime_error("payload larger than header");
    grid.validate();
    return grid;
}

}  // namespace ailurus
