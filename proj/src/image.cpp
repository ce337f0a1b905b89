#include "ailurus/image.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "ailurus/io_util.hpp"

namespace ailurus {

namespace {

// Reads the next header token, skipping whitespace and '#' comments.
std::string next_token(std::istream& in) {
    std::string tok;
    int c;
    while ((c = in.get()) != EOF) {
        if (c == '#') {
            while ((c = in.get()) != EOF && c != '\n') {
            }
            continue;
        }
        if (std::isspace(c)) {
            if (!tok.empty()) return tok;
            continue;
        }
        tok.push_back(static_cast<char>(c));
    }
    return tok;
}

}  // namespace

Image load_image(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open image: " + path);
    std::string magic = next_token(in);
    int channels;
    if (magic == "P5")
        channels = 1;
    else if (magic == "P6")
        channels = 3;
    else
        throw std::runtime_error("unsupported image format (need P5/P6): " +
                                 path);
    Image img;
    img.channels = channels;
    img.width = std::stoi(next_token(in));
    img.height = std::stoi(next_token(in));
    const int maxval = std::stoi(next_token(in));
    if (img.width < 1 || img.height < 1 || maxval != 255)
        throw std::runtime_error("unsupported image header: " + path);
    const std::size_t count =
        static_cast<std::size_t>(img.width) * img.height * channels;
    img.pixels.resize(count);
    in.read(reinterpret_cast<char*>(img.pixels.data()),
            static_cast<std::streamsize>(count));
    if (static_cast<std::size_t>(in.gcount()) != count)
        throw std::runtime_error("truncated image payload: " + path);
    return img;
}

void save_image(const Image& img, const std::string& path) {
    if (img.channels != 1 && img.channels != 3)
        throw std::invalid_argument("channels must be 1 or 3");
    std::ostringstream out;
    out << (img.channels == 1 ? "P5" : "P6") << '\n'
        << img.width << ' ' << img.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.pixels.data()),
              static_cast<std::streamsize>(img.pixels.size()));
    write_file_atomic(path, out.str());
}

TokenGrid patchify(const Image& img, int patch) {
    if (patch < 1 || img.height % patch != 0 || img.width % patch != 0)
        throw std::invalid_argument("image size not a multiple of patch");
    TokenGrid grid;
    grid.height = img.height / patch;
    grid.width = img.width / patch;
    grid.dim = img.channels * patch * patch;
    grid.data.resize(static_cast<std::size_t>(grid.tokens()) * grid.dim);
    for (int pr = 0; pr < grid.height; ++pr)
        for (int pc = 0; pc < grid.width; ++pc) {
            auto dst = grid.token(pr * grid.width + pc);
            int d = 0;
            for (int y = 0; y < patch; ++y)
                for (int x = 0; x < patch; ++x)
                    for (int ch = 0; ch < img.channels; ++ch) {
                        const std::size_t px =
                            (static_cast<std::size_t>(pr * patch + y) *
                                 img.width +
                             pc * patch + x) *
                                img.channels +
                            ch;
                        dst[d++] = img.pixels[px] / 255.0f;
                    }
        }
    return grid;
}

Image unpatchify(const TokenGrid& grid, int patch, int channels) {
    if (grid.dim != channels * patch * patch)
        throw std::invalid_argument("grid dim does not match patch layout");
    Image img;
    img.channels = channels;
    img.height = grid.height * patch;
    img.width = grid.width * patch;
    img.pixels.resize(static_cast<std::size_t>(img.height) * img.width *
                      channels);
    for (int pr = 0; pr < grid.height; ++pr)
        for (int pc = 0; pc < grid.width; ++pc) {
            auto src = grid.token(pr * grid.width + pc);
            int d = 0;
            for (int y = 0; y < patch; ++y)
                for (int x = 0; x < patch; ++x)
                    for (int ch = 0; ch < channels; ++ch) {
                        const std::size_t px =
                            (static_cast<std::size_t>(pr * patch + y) *
                                 img.width +
                             pc * patch + x) *
                                channels +
                            ch;
                        const float v = std::round(src[d++] * 255.0f);
                        img.pixels[px] = static_cast<std::uint8_t>(
                            std::clamp(v, 0.0f, 255.0f));
                    }
        }
    return img;
}

}  // namespace ailurus
