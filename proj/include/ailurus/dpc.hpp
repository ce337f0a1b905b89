#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ailurus/grid.hpp"
#include "ailurus/neighbors.hpp"

namespace ailurus {

struct DpcConfig {
    int num_clusters = 0;      // M; 0 means "set per grid"
    double alpha = 0.9;        // spatial-weight floor, (0, 1]
    int lambda = 50;           // spatial neighbor count
    int knn = 1;               // density neighbor count k, k <= lambda
    int merge_layer = 2;       // encoder layer L at which clustering runs
    std::uint64_t seed = 0;

    void validate(int n_tokens) const;
};

// Per-token density-peaks scores. gamma = rho * delta with
// rho * inf = inf.
struct DensityScores {
    std::vector<double> rho;
    std::vector<double> delta;
    std::vector<double> gamma;
};

struct ClusterAssignment {
    std::vector<std::int32_t> centers;     // M distinct token indices
    std::vector<std::int32_t> assignment;  // N cluster ids in [0, M)
    std::vector<std::int32_t> sizes;       // per-cluster member counts
    // Tokens assigned via the global feature-nearest fallback (no
    // center inside their spatial neighborhood).
    std::vector<std::uint8_t> fallback;
    int fallback_count = 0;

    int num_clusters() const { return static_cast<int>(centers.size()); }
    int num_tokens() const { return static_cast<int>(assignment.size()); }
    void validate() const;

    // Text format: line 1 "M N", line 2 the M center indices,
    // line 3 the N assignment ids.
    std::string serialize() const;
    static ClusterAssignment parse(const std::string& text);
};

struct ReducedSequence {
    std::vector<float> reps;             // M x D representative vectors
    int dim = 0;
    std::vector<std::int32_t> weights;   // multiplicities m_n
    ClusterAssignment assignment;        // for unfolding

    int size() const { return static_cast<int>(weights.size()); }
};

// Eq.-style spatial weight: (1-alpha)*rank/lambda + alpha for 1-based
// rank <= lambda, +inf when the token is outside the neighborhood
// (rank <= 0 encodes "absent").
double spatial_weight(int rank, int lambda, double alpha);

// Euclidean feature distance, double accumulation.
double feature_distance(std::span<const float> a, std::span<const float> b);

std::vector<double> local_density(const TokenGrid& grid,
                                  const NeighborIndex& nbr,
                                  const DpcConfig& cfg, int threads = 0);

std::vector<double> distance_indicator(const TokenGrid& grid,
                                       const std::vector<double>& rho,
                                       const NeighborIndex& nbr,
                                       const DpcConfig& cfg, int threads = 0);

DensityScores density_scores(const TokenGrid& grid, const NeighborIndex& nbr,
                             const DpcConfig& cfg, int threads = 0);

// Top-M tokens by gamma. Infinite gamma sorts first (descending rho,
// then ascending index); finite gamma by descending gamma, then
// descending rho, then ascending index.
std::vector<std::int32_t> select_centers(const DensityScores& scores, int m);

ClusterAssignment assign_tokens(const TokenGrid& grid,
                                const std::vector<std::int32_t>& centers,
                                const NeighborIndex& nbr, const DpcConfig& cfg,
                                int threads = 0);

ReducedSequence merge_tokens(const TokenGrid& grid,
                             const ClusterAssignment& asg);

// Full spatial-aware DPC: neighbors -> density -> delta -> centers ->
// assignment -> merge. Single pass, no refinement.
ReducedSequence cluster(const TokenGrid& grid, const DpcConfig& cfg,
                        int threads = 0);

}  // namespace ailurus
