// Command-line front end: spatial-aware token clustering, the
// reduce-forward-unfold encoder, method comparisons, and assignment
// diagnostics on grid files, PPM/PGM images, or synthetic data.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ailurus/dpc.hpp"
#include "ailurus/grid.hpp"
#include "ailurus/image.hpp"
#include "ailurus/io_util.hpp"
#include "ailurus/metrics.hpp"
#include "ailurus/pipeline.hpp"

using namespace ailurus;
namespace fs = std::filesystem;

namespace {

struct Opts {
    std::string input;
    std::string synth = "random";
    int h = 16, w = 16, dim = 16;
    int patch = 8;
    int blocks = 4;
    double noise = 0.0;
    int clusters = 0;  // 0 -> N/4
    double alpha = 0.9;
    int lambda = 50;
    int knn = 1;
    int layer = 2;
    int depth = 12;
    int heads = 4;
    std::uint64_t seed = 0;
    std::string out = "out";
    std::string mode = "both";
    int runs = 13;
    int warmup = 3;
    int seeds = 20;
    int kmeans_iters = 10;
    std::string sweep;
};

bool ends_with(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() &&
           s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

bool is_image_path(const std::string& path) {
    return ends_with(path, ".ppm") || ends_with(path, ".pgm");
}

// Config file < CLI flag precedence: file values become the defaults
// before the parser runs, flags override them.
void apply_config_file(int argc, char** argv, Opts& o) {
    std::string path;
    for (int i = 1; i + 1 < argc; ++i)
        if (std::string(argv[i]) == "--config") path = argv[i + 1];
    if (path.empty()) return;
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config: " + path);
    nlohmann::json j = nlohmann::json::parse(in);
    auto get = [&](const char* key, auto& dst) {
        if (j.contains(key)) j.at(key).get_to(dst);
    };
    get("input", o.input);
    get("synth", o.synth);
    get("h", o.h);
    get("w", o.w);
    get("dim", o.dim);
    get("patch", o.patch);
    get("blocks", o.blocks);
    get("noise", o.noise);
    get("clusters", o.clusters);
    get("alpha", o.alpha);
    get("lambda", o.lambda);
    get("knn", o.knn);
    get("layer", o.layer);
    get("depth", o.depth);
    get("heads", o.heads);
    get("seed", o.seed);
    get("out", o.out);
    get("mode", o.mode);
    get("runs", o.runs);
    get("warmup", o.warmup);
    get("seeds", o.seeds);
    get("kmeans_iters", o.kmeans_iters);
    get("sweep", o.sweep);
}

void add_common(CLI::App* cmd, Opts& o) {
    cmd->set_help_flag("--help", "print help");  // frees --h for height
    cmd->add_option("--input", o.input,
                    "grid stem, .ppm/.pgm image, or assignment .txt");
    cmd->add_option("--synth", o.synth, "blocks|gradient|random");
    cmd->add_option("--h", o.h);
    cmd->add_option("--w", o.w);
    cmd->add_option("--dim", o.dim);
    cmd->add_option("--patch", o.patch, "patch size for image inputs");
    cmd->add_option("--blocks", o.blocks, "block count for --synth blocks");
    cmd->add_option("--noise", o.noise, "noise amplitude for --synth blocks");
    cmd->add_option("--clusters", o.clusters, "M (default N/4)");
    cmd->add_option("--alpha", o.alpha);
    cmd->add_option("--lambda", o.lambda);
    cmd->add_option("--knn", o.knn);
    cmd->add_option("--layer", o.layer, "merge layer L");
    cmd->add_option("--depth", o.depth);
    cmd->add_option("--heads", o.heads);
    cmd->add_option("--seed", o.seed);
    cmd->add_option("--out", o.out, "output directory");
    std::string ignored;
    cmd->add_option("--config", ignored, "JSON config file (flag overrides)");
}

TokenGrid acquire_grid(const Opts& o) {
    if (!o.input.empty()) {
        if (is_image_path(o.input))
            return patchify(load_image(o.input), o.patch);
        std::string stem = o.input;
        for (const char* ext : {".json", ".bin"})
            if (ends_with(stem, ext))
                stem = stem.substr(0, stem.size() - 5 + (ext[1] == 'b'));
        return load_grid(stem);
    }
    SynthParams p;
    p.blocks = o.blocks;
    p.noise = static_cast<float>(o.noise);
    return synth_grid(synth_kind_from_string(o.synth), o.h, o.w, o.dim, p,
                      o.seed);
}

DpcConfig dpc_config(const Opts& o, int n_tokens) {
    DpcConfig cfg;
    cfg.num_clusters = o.clusters > 0 ? o.clusters : std::max(1, n_tokens / 4);
    cfg.alpha = o.alpha;
    cfg.lambda = o.lambda;
    cfg.knn = o.knn;
    cfg.merge_layer = o.layer;
    cfg.seed = o.seed;
    return cfg;
}

PipelineConfig pipeline_config(const Opts& o, int n_tokens,
                               PipelineMode mode) {
    PipelineConfig cfg;
    cfg.depth = o.depth;
    cfg.dim = o.dim;
    cfg.heads = o.heads;
    cfg.mode = mode;
    cfg.dpc = dpc_config(o, n_tokens);
    return cfg;
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

void cluster_color(int id, std::uint64_t seed, std::uint8_t rgb[3]) {
    const std::uint64_t hash = splitmix64(seed * 0x100000001b3ull + id);
    rgb[0] = static_cast<std::uint8_t>(hash & 0xff);
    rgb[1] = static_cast<std::uint8_t>((hash >> 8) & 0xff);
    rgb[2] = static_cast<std::uint8_t>((hash >> 16) & 0xff);
}

Image assignment_map(const ClusterAssignment& asg, int h, int w, int scale,
                     std::uint64_t seed) {
    Image img;
    img.channels = 3;
    img.height = h * scale;
    img.width = w * scale;
    img.pixels.resize(static_cast<std::size_t>(img.height) * img.width * 3);
    for (int r = 0; r < img.height; ++r)
        for (int c = 0; c < img.width; ++c) {
            std::uint8_t rgb[3];
            cluster_color(asg.assignment[(r / scale) * w + c / scale], seed,
                          rgb);
            auto* px = &img.pixels[(static_cast<std::size_t>(r) * img.width +
                                    c) *
                                   3];
            px[0] = rgb[0];
            px[1] = rgb[1];
            px[2] = rgb[2];
        }
    return img;
}

// false-color rendering of up to the first 3 channels, min-max
// normalized per channel
Image false_color(const TokenGrid& grid) {
    Image img;
    img.channels = 3;
    img.height = grid.height;
    img.width = grid.width;
    img.pixels.resize(static_cast<std::size_t>(grid.tokens()) * 3);
    for (int ch = 0; ch < 3; ++ch) {
        const int d = std::min(ch, grid.dim - 1);
        float lo = grid.data[d], hi = grid.data[d];
        for (int i = 0; i < grid.tokens(); ++i) {
            lo = std::min(lo, grid.token(i)[d]);
            hi = std::max(hi, grid.token(i)[d]);
        }
        const float span = hi > lo ? hi - lo : 1.0f;
        for (int i = 0; i < grid.tokens(); ++i)
            img.pixels[i * 3 + ch] = static_cast<std::uint8_t>(
                std::clamp((grid.token(i)[d] - lo) / span * 255.0f, 0.0f,
                           255.0f));
    }
    return img;
}

double pixel_mae(const Image& a, const Image& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.pixels.size(); ++i)
        acc += std::abs(static_cast<double>(a.pixels[i]) - b.pixels[i]);
    return acc / a.pixels.size();
}

int cmd_cluster(const Opts& o) {
    TokenGrid grid = acquire_grid(o);
    const bool image_input = !o.input.empty() && is_image_path(o.input);
    DpcConfig cfg = dpc_config(o, grid.tokens());
    ReducedSequence red = cluster(grid, cfg);

    fs::create_directories(o.out);
    write_file_atomic(o.out + "/assignment.txt", red.assignment.serialize());
    write_file_atomic(o.out + "/stats.json",
                      assignment_stats(red.assignment).to_json());

    const int scale = image_input ? o.patch : 1;
    save_image(assignment_map(red.assignment, grid.height, grid.width, scale,
                              o.seed),
               o.out + "/assignment.ppm");

    TokenGrid unfolded =
        unfold(red.reps, grid.dim, red.assignment, grid.height, grid.width);
    if (image_input) {
        const Image original = load_image(o.input);
        const Image recon = unpatchify(unfolded, o.patch, original.channels);
        save_image(recon, o.out + "/reconstruction." +
                              (original.channels == 1 ? "pgm" : "ppm"));

        // random-assignment control reconstruction for the same M
        std::mt19937_64 rng(o.seed ^ 0x5bf03635ull);
        ClusterAssignment rnd;
        const int m = red.assignment.num_clusters();
        rnd.assignment.resize(grid.tokens());
        std::uniform_int_distribution<int> pick(0, m - 1);
        for (auto& a : rnd.assignment) a = pick(rng);
        for (int c = 0; c < m; ++c) rnd.centers.push_back(c);
        rnd.sizes.assign(m, 0);
        for (auto a : rnd.assignment) ++rnd.sizes[a];
        std::vector<std::vector<double>> acc(m,
                                             std::vector<double>(grid.dim));
        for (int i = 0; i < grid.tokens(); ++i)
            for (int d = 0; d < grid.dim; ++d)
                acc[rnd.assignment[i]][d] += grid.token(i)[d];
        TokenGrid rnd_unfolded = grid;
        for (int i = 0; i < grid.tokens(); ++i) {
            const int c = rnd.assignment[i];
            for (int d = 0; d < grid.dim; ++d)
                rnd_unfolded.token(i)[d] = static_cast<float>(
                    acc[c][d] / std::max(1, rnd.sizes[c]));
        }
        const Image rnd_recon =
            unpatchify(rnd_unfolded, o.patch, original.channels);
        nlohmann::json metrics = {
            {"reconstruction_mae", pixel_mae(original, recon)},
            {"random_assignment_mae", pixel_mae(original, rnd_recon)}};
        write_file_atomic(o.out + "/metrics.json", metrics.dump(2) + "\n");
    } else {
        save_image(false_color(unfolded), o.out + "/reconstruction.ppm");
        save_grid(unfolded, o.out + "/reconstruction");
    }
    return 0;
}

RunTiming median_timing(std::vector<RunTiming> runs, int warmup) {
    if (warmup >= static_cast<int>(runs.size())) warmup = 0;
    runs.erase(runs.begin(), runs.begin() + warmup);
    auto median = [&](auto field) {
        std::vector<double> v;
        for (auto& r : runs) v.push_back(r.*field);
        std::sort(v.begin(), v.end());
        return v[v.size() / 2];
    };
    RunTiming t;
    t.blocks_ms = median(&RunTiming::blocks_ms);
    t.clustering_ms = median(&RunTiming::clustering_ms);
    t.recovering_ms = median(&RunTiming::recovering_ms);
    t.total_ms = median(&RunTiming::total_ms);
    return t;
}

int cmd_forward(const Opts& o) {
    TokenGrid grid = acquire_grid(o);
    if (grid.dim != o.dim)
        throw std::runtime_error("--dim must match the input grid dim");
    auto weights = init_block_weights(o.dim, o.heads, o.depth, o.seed);
    fs::create_directories(o.out);

    std::vector<PipelineMode> modes;
    if (o.mode == "both" || o.mode == "baseline")
        modes.push_back(PipelineMode::Baseline);
    if (o.mode == "both" || o.mode == "ailurus")
        modes.push_back(PipelineMode::Ailurus);
    if (modes.empty()) throw std::runtime_error("unknown mode: " + o.mode);

    TokenGrid outputs[2];
    bool have[2] = {false, false};
    for (PipelineMode mode : modes) {
        const char* name =
            mode == PipelineMode::Baseline ? "baseline" : "ailurus";
        PipelineConfig cfg = pipeline_config(o, grid.tokens(), mode);
        std::vector<RunTiming> timings;
        ForwardResult res;
        const int runs = std::max(1, o.runs);
        for (int r = 0; r < runs; ++r) {
            res = encoder_forward(grid, weights, cfg);
            timings.push_back(res.timing);
        }
        save_grid(res.output, o.out + "/output_" + name);
        write_file_atomic(o.out + "/timing_" + std::string(name) + ".json",
                          median_timing(timings, o.warmup).to_json());
        write_file_atomic(o.out + "/cost_" + std::string(name) + ".json",
                          flops_estimate(cfg, grid.height, grid.width)
                              .to_json());
        if (res.assignment)
            write_file_atomic(o.out + "/assignment.txt",
                              res.assignment->serialize());
        outputs[mode == PipelineMode::Ailurus] = std::move(res.output);
        have[mode == PipelineMode::Ailurus] = true;
    }
    if (have[0] && have[1])
        write_file_atomic(
            o.out + "/similarity.json",
            reconstruction_similarity(outputs[0], outputs[1]).to_json());
    return 0;
}

int cmd_compare(const Opts& o) {
    if (o.seeds < 1) throw std::runtime_error("--seeds must be >= 1");
    fs::create_directories(o.out);
    std::ostringstream csv;
    csv << "seed,ailurus_cosine,kmeans_cosine\n";
    int wins = 0, ties = 0;
    for (int s = 0; s < o.seeds; ++s) {
        Opts seeded = o;
        seeded.seed = o.seed + s;
        seeded.input.clear();
        TokenGrid grid = acquire_grid(seeded);
        auto weights =
            init_block_weights(o.dim, o.heads, o.depth, seeded.seed);

        auto base = encoder_forward(
            grid, weights,
            pipeline_config(seeded, grid.tokens(), PipelineMode::Baseline));
        auto ail = encoder_forward(
            grid, weights,
            pipeline_config(seeded, grid.tokens(), PipelineMode::Ailurus));
        PipelineConfig kcfg =
            pipeline_config(seeded, grid.tokens(), PipelineMode::Ailurus);
        auto km = encoder_forward_with_reduction(
            grid, weights, kcfg, [&](const TokenGrid& mid) {
                auto red = kmeans_baseline(mid, kcfg.dpc.num_clusters,
                                           o.kmeans_iters, seeded.seed);
                // superpixel baseline: centroids pass through standard
                // attention, without the multiplicity bias
                for (auto& w : red.weights) w = 1;
                return red;
            });

        const double sim_ail =
            reconstruction_similarity(base.output, ail.output).mean_cosine;
        const double sim_km =
            reconstruction_similarity(base.output, km.output).mean_cosine;
        csv << seeded.seed << ',' << sim_ail << ',' << sim_km << '\n';
        if (sim_ail > sim_km)
            ++wins;
        else if (sim_ail == sim_km)
            ++ties;
    }
    write_file_atomic(o.out + "/compare.csv", csv.str());
    nlohmann::json summary = {
        {"seeds", o.seeds},
        {"wins", wins},
        {"ties", ties},
        {"win_rate", (wins + 0.5 * ties) / o.seeds}};
    write_file_atomic(o.out + "/summary.json", summary.dump(2) + "\n");
    return 0;
}

int cmd_stats(const Opts& o) {
    fs::create_directories(o.out);
    if (!o.input.empty() && ends_with(o.input, ".txt")) {
        std::ifstream in(o.input);
        if (!in) throw std::runtime_error("cannot open: " + o.input);
        std::stringstream buf;
        buf << in.rdbuf();
        auto stats = assignment_stats(ClusterAssignment::parse(buf.str()));
        write_file_atomic(o.out + "/stats.csv", stats.to_csv());
        write_file_atomic(o.out + "/stats.json", stats.to_json());
        return 0;
    }
    TokenGrid grid = acquire_grid(o);
    std::vector<int> sweep;
    if (!o.sweep.empty()) {
        std::stringstream ss(o.sweep);
        std::string item;
        while (std::getline(ss, item, ',')) sweep.push_back(std::stoi(item));
    } else {
        sweep.push_back(o.clusters > 0 ? o.clusters
                                       : std::max(1, grid.tokens() / 4));
    }
    nlohmann::json summary = nlohmann::json::array();
    for (int m : sweep) {
        Opts om = o;
        om.clusters = m;
        auto red = cluster(grid, dpc_config(om, grid.tokens()));
        auto stats = assignment_stats(red.assignment);
        write_file_atomic(o.out + "/stats_M" + std::to_string(m) + ".csv",
                          stats.to_csv());
        const auto it = stats.count.find(1);
        summary.push_back(
            {{"M", m},
             {"singleton_count", it == stats.count.end() ? 0 : it->second},
             {"singleton_fraction", stats.singleton_fraction}});
    }
    write_file_atomic(o.out + "/sweep.json", summary.dump(2) + "\n");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"adaptive-resolution token reduction toolkit"};
    app.require_subcommand(1);
    Opts o;
    try {
        apply_config_file(argc, argv, o);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }

    auto* c_cluster = app.add_subcommand(
        "cluster", "cluster a grid or image and render the assignment");
    auto* c_forward = app.add_subcommand(
        "forward", "run the encoder pipeline and report cost/timing");
    auto* c_compare = app.add_subcommand(
        "compare", "benchmark against the K-means baseline over seeds");
    auto* c_stats =
        app.add_subcommand("stats", "assignment size histograms");
    for (auto* cmd : {c_cluster, c_forward, c_compare, c_stats})
        add_common(cmd, o);
    c_forward->add_option("--mode", o.mode, "baseline|ailurus|both");
    c_forward->add_option("--runs", o.runs, "timing repetitions");
    c_forward->add_option("--warmup", o.warmup, "excluded warm-up runs");
    c_compare->add_option("--seeds", o.seeds);
    c_compare->add_option("--kmeans-iters", o.kmeans_iters);
    c_stats->add_option("--sweep", o.sweep, "comma-separated M values");

    CLI11_PARSE(app, argc, argv);
    try {
        if (c_cluster->parsed()) return cmd_cluster(o);
        if (c_forward->parsed()) return cmd_forward(o);
        if (c_compare->parsed()) return cmd_compare(o);
        if (c_stats->parsed()) return cmd_stats(o);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
