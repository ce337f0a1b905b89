#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ailurus/dpc.hpp"
#include "ailurus/grid.hpp"

namespace ailurus {

struct SimilarityReport {
    double mean_cosine = 0.0;
    std::vector<double> per_layer;  // optional per-layer breakdown

    std::string to_json() const;
};

struct AssignmentStats {
    // cluster size x -> count y2(x) and fraction y1(x)
    std::map<int, int> count;
    std::map<int, double> fraction;
    double singleton_fraction = 0.0;

    std::string to_json() const;
    std::string to_csv() const;  // columns: size, y1, y2
};

// O(N^2) reference transcription of the spatial-aware DPC equations,
// independent of the spatial_dpc code path. Oracle scale only.
ClusterAssignment brute_force_dpc(const TokenGrid& grid,
                                  const DpcConfig& cfg);
ReducedSequence brute_force_dpc_reduce(const TokenGrid& grid,
                                       const DpcConfig& cfg);

// Lloyd K-means in feature space with deterministic farthest-point
// seeding. Same ReducedSequence contract as the DPC path so it drops
// into the pipeline as a baseline.
ReducedSequence kmeans_baseline(const TokenGrid& grid, int m, int iters,
                                std::uint64_t seed);

// Within-cluster sum of squared distances for a reduced sequence.
double kmeans_objective(const TokenGrid& grid, const ReducedSequence& red);

// Mean per-token cosine similarity; zero vectors contribute 0.
SimilarityReport reconstruction_similarity(const TokenGrid& reference,
                                           const TokenGrid& reconstructed);

// Bins reference-pair cosine similarity into 10 equal intervals over
// [-1, 1] and reports, per occupied bin, the fraction of pairs whose
// output-side similarity lands in the same bin. Uses all pairs when
// N <= 1024, else 1e6 seeded samples.
struct SimilarityPreservation {
    std::vector<double> retention;    // 10 bins, NaN-free; empty bin -> 0
    std::vector<std::int64_t> pairs;  // pairs per bin

    std::string to_json() const;
};

SimilarityPreservation pairwise_similarity_preservation(
    const TokenGrid& input_features, const TokenGrid& output_features,
    std::uint64_t seed = 0);

AssignmentStats assignment_stats(const ClusterAssignment& asg);

}  // namespace ailurus
