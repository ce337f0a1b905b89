#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ailurus/attention.hpp"
#include "ailurus/dpc.hpp"
#include "ailurus/grid.hpp"

namespace ailurus {

enum class PipelineMode { Baseline, Ailurus };

PipelineMode pipeline_mode_from_string(const std::string& s);

struct PipelineConfig {
    int depth = 12;
    int dim = 64;
    int heads = 4;
    DpcConfig dpc;              // includes merge_layer L
    PipelineMode mode = PipelineMode::Ailurus;
    bool pos_embed = false;     // seeded positional vectors added at input

    void validate() const;
};

// Analytic multiply-accumulate counts (MACs, not FLOPs x 2).
struct CostReport {
    std::vector<double> attention_per_layer;
    std::vector<double> mlp_per_layer;
    double attention_macs = 0.0;
    double mlp_macs = 0.0;
    double clustering_macs = 0.0;
    double total_macs = 0.0;
    double ratio = 1.0;        // ailurus total / baseline total
    double block_ratio = 1.0;  // block MACs only, excluding clustering

    std::string to_json() const;
};

struct RunTiming {
    double blocks_ms = 0.0;
    double clustering_ms = 0.0;
    double recovering_ms = 0.0;
    double total_ms = 0.0;

    std::string to_json() const;
};

struct ForwardResult {
    TokenGrid output;  // always h x w x D
    RunTiming timing;
    std::optional<ClusterAssignment> assignment;  // ailurus mode only
};

// Runs layers [0, L) on the full sequence, clusters the layer-L input
// (ailurus mode), runs layers [L, depth) on the weighted reduced
// sequence, and unfolds to h x w at the output. Baseline mode keeps
// the full sequence throughout.
ForwardResult encoder_forward(const TokenGrid& grid,
                              const std::vector<BlockWeights>& weights,
                              const PipelineConfig& cfg, int threads = 0);

// Same pipeline with a caller-supplied reduction (e.g. the K-means
// baseline) applied at the merge layer instead of spatial DPC.
using Reducer = std::function<ReducedSequence(const TokenGrid&)>;
ForwardResult encoder_forward_with_reduction(
    const TokenGrid& grid, const std::vector<BlockWeights>& weights,
    const PipelineConfig& cfg, const Reducer& reducer, int threads = 0);

// Copies each representative vector back to every grid position of its
// cluster. Exact copy, no interpolation.
TokenGrid unfold(const std::vector<float>& reps, int dim,
                 const ClusterAssignment& asg, int h, int w);

CostReport flops_estimate(const PipelineConfig& cfg, int h, int w);

}  // namespace ailurus
