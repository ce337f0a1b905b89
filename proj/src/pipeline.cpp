#include "ailurus/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>
#include <stdexcept>

#include <json.hpp>

namespace ailurus {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start)
        .count();
}

}  // namespace

PipelineMode pipeline_mode_from_string(const std::string& s) {
    if (s == "baseline") return PipelineMode::Baseline;
    if (s == "ailurus") return PipelineMode::Ailurus;
    throw std::invalid_argument("unknown pipeline mode: " + s);
}

void PipelineConfig::validate() const {
    if (depth < 1) throw std::invalid_argument("depth must be >= 1");
    if (dim < 1 || heads < 1 || dim % heads != 0)
        throw std::invalid_argument("heads must divide dim");
    if (dpc.merge_layer < 0 || dpc.merge_layer >= depth)
        throw std::invalid_argument("merge_layer out of range");
}

ForwardResult encoder_forward(const TokenGrid& grid,
                              const std::vector<BlockWeights>& weights,
                              const PipelineConfig& cfg, int threads) {
    DpcConfig dpc = cfg.dpc;
    if (dpc.num_clusters == 0) dpc.num_clusters = grid.tokens();
    return encoder_forward_with_reduction(
        grid, weights, cfg,
        [&dpc, threads](const TokenGrid& mid) {
            return cluster(mid, dpc, threads);
        },
        threads);
}

ForwardResult encoder_forward_with_reduction(
    const TokenGrid& grid, const std::vector<BlockWeights>& weights,
    const PipelineConfig& cfg, const Reducer& reducer, int threads) {
    cfg.validate();
    if (grid.dim != cfg.dim)
        throw std::invalid_argument("grid dim does not match config");
    if (static_cast<int>(weights.size()) != cfg.depth)
        throw std::invalid_argument("weight count does not match depth");

    const auto t0 = Clock::now();
    ForwardResult result;
    RunTiming& timing = result.timing;

    WeightedSequence seq = WeightedSequence::uniform(grid.data, grid.dim);
    if (cfg.pos_embed) {
        std::mt19937_64 rng(cfg.dpc.seed ^ 0x9e3779b97f4a7c15ull);
        std::normal_distribution<float> normal(0.0f, 1.0f);
        for (auto& v : seq.tokens) v += 0.02f * normal(rng);
    }

    const int merge_at =
        (cfg.mode == PipelineMode::Ailurus) ? cfg.dpc.merge_layer : cfg.depth;

    auto tb = Clock::now();
    for (int l = 0; l < merge_at; ++l)
        seq = block_forward(seq, weights[l], threads);
    timing.blocks_ms += ms_since(tb);

    if (cfg.mode == PipelineMode::Ailurus) {
        auto tc = Clock::now();
        TokenGrid mid;
        mid.height = grid.height;
        mid.width = grid.width;
        mid.dim = grid.dim;
        mid.data = seq.tokens;
        ReducedSequence red = reducer(mid);
        result.assignment = red.assignment;
        seq.tokens = std::move(red.reps);
        seq.log_weights.resize(red.weights.size());
        for (std::size_t i = 0; i < red.weights.size(); ++i)
            seq.log_weights[i] = std::log(static_cast<double>(red.weights[i]));
        timing.clustering_ms = ms_since(tc);

        tb = Clock::now();
        for (int l = merge_at; l < cfg.depth; ++l)
            seq = block_forward(seq, weights[l], threads);
        timing.blocks_ms += ms_since(tb);

        auto tr = Clock::now();
        result.output = unfold(seq.tokens, grid.dim, *result.assignment,
                               grid.height, grid.width);
        timing.recovering_ms = ms_since(tr);
    } else {
        result.output.height = grid.height;
        result.output.width = grid.width;
        result.output.dim = grid.dim;
        result.output.data = std::move(seq.tokens);
    }

    timing.total_ms = ms_since(t0);
    return result;
}

TokenGrid unfold(const std::vector<float>& reps, int dim,
                 const ClusterAssignment& asg, int h, int w) {
    if (asg.num_tokens() != h * w)
        throw std::invalid_argument("assignment does not cover the grid");
    const int m = asg.num_clusters();
    if (reps.size() != static_cast<std::size_t>(m) * dim)
        throw std::invalid_argument("representative shape mismatch");
    TokenGrid out;
    out.height = h;
    out.width = w;
    out.dim = dim;
    out.data.resize(static_cast<std::size_t>(h) * w * dim);
    for (int i = 0; i < h * w; ++i) {
        const int c = asg.assignment[i];
        if (c < 0 || c >= m)
            throw std::invalid_argument("assignment id out of range");
        const float* src = reps.data() + static_cast<std::size_t>(c) * dim;
        std::copy(src, src + dim, out.data.begin() +
                                      static_cast<std::size_t>(i) * dim);
    }
    return out;
}

CostReport flops_estimate(const PipelineConfig& cfg, int h, int w) {
    cfg.validate();
    const double n_full = static_cast<double>(h) * w;
    const double d = cfg.dim;
    const int depth = cfg.depth;
    const int merge = cfg.dpc.merge_layer;
    const double m = (cfg.dpc.num_clusters > 0)
                         ? static_cast<double>(cfg.dpc.num_clusters)
                         : n_full;

    auto attn_macs = [d](double n) { return 4.0 * n * d * d + 2.0 * n * n * d; };
    auto mlp_macs = [d](double n) { return 8.0 * n * d * d; };

    CostReport report;
    const bool reduced = cfg.mode == PipelineMode::Ailurus;
    for (int l = 0; l < depth; ++l) {
        const double n = (reduced && l >= merge) ? m : n_full;
        report.attention_per_layer.push_back(attn_macs(n));
        report.mlp_per_layer.push_back(mlp_macs(n));
    }

    // closed-form totals (the per-layer vectors are the cross-check)
    const double baseline_blocks = depth * (attn_macs(n_full) + mlp_macs(n_full));
    if (reduced) {
        report.attention_macs =
            merge * attn_macs(n_full) + (depth - merge) * attn_macs(m);
        report.mlp_macs = merge * mlp_macs(n_full) + (depth - merge) * mlp_macs(m);
        report.clustering_macs =
            n_full * cfg.dpc.lambda * d + n_full * m * d;
    } else {
        report.attention_macs = depth * attn_macs(n_full);
        report.mlp_macs = depth * mlp_macs(n_full);
        report.clustering_macs = 0.0;
    }
    report.total_macs =
        report.attention_macs + report.mlp_macs + report.clustering_macs;
    report.block_ratio =
        (report.attention_macs + report.mlp_macs) / baseline_blocks;
    report.ratio = report.total_macs / baseline_blocks;
    return report;
}

std::string CostReport::to_json() const {
    nlohmann::json j = {{"attention_macs", attention_macs},
                        {"mlp_macs", mlp_macs},
                        {"clustering_macs", clustering_macs},
                        {"total_macs", total_macs},
                        {"ratio", ratio},
                        {"block_ratio", block_ratio}};
    return j.dump(2) + "\n";
}

std::string RunTiming::to_json() const {
    nlohmann::json j = {{"blocks_ms", blocks_ms},
                        {"clustering_ms", clustering_ms},
                        {"recovering_ms", recovering_ms},
                        {"total_ms", total_ms}};
    return j.dump(2) + "\n";
}

}  // namespace ailurus
