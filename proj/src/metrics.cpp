#include "ailurus/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace ailurus {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Independent transcription of the Euclidean feature distance.
double ref_distance(const TokenGrid& grid, int i, int j) {
    const float* a = grid.data.data() + static_cast<std::size_t>(i) * grid.dim;
    const float* b = grid.data.data() + static_cast<std::size_t>(j) * grid.dim;
    double s = 0.0;
    for (int d = 0; d < grid.dim; ++d) {
        const double diff = static_cast<double>(a[d]) - b[d];
        s += diff * diff;
    }
    return std::sqrt(s);
}

double ref_sq_distance(const float* a, const float* b, int dim) {
    double s = 0.0;
    for (int d = 0; d < dim; ++d) {
        const double diff = static_cast<double>(a[d]) - b[d];
        s += diff * diff;
    }
    return s;
}

double cosine(const float* a, const float* b, int dim) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (int d = 0; d < dim; ++d) {
        dot += static_cast<double>(a[d]) * b[d];
        na += static_cast<double>(a[d]) * a[d];
        nb += static_cast<double>(b[d]) * b[d];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

}  // namespace

ClusterAssignment brute_force_dpc(const TokenGrid& grid,
                                  const DpcConfig& cfg) {
    const int n = grid.tokens();
    if (n > 4096) throw std::invalid_argument("oracle scale exceeded");
    cfg.validate(n);
    const int w = grid.width;

    // full pairwise spatial ranks: rank[i][j] is 1-based, 0 for j == i
    std::vector<std::vector<int>> rank(n, std::vector<int>(n, 0));
    for (int i = 0; i < n; ++i) {
        std::vector<std::pair<std::int64_t, int>> order;
        order.reserve(n - 1);
        const int ri = i / w, ci = i % w;
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            const std::int64_t dr = ri - j / w, dc = ci - j % w;
            order.emplace_back(dr * dr + dc * dc, j);
        }
        std::sort(order.begin(), order.end());
        for (std::size_t r = 0; r < order.size(); ++r)
            rank[i][order[r].second] = static_cast<int>(r) + 1;
    }

    auto weight = [&](int i, int j) -> double {
        const int r = rank[i][j];
        if (r < 1 || r > cfg.lambda) return kInf;
        return (1.0 - cfg.alpha) * r / cfg.lambda + cfg.alpha;
    };

    // rho per Eq.-style definition: k nearest by weighted distance
    // among the spatial neighborhood (infinite weights excluded)
    std::vector<double> rho(n);
    for (int i = 0; i < n; ++i) {
        std::vector<std::pair<double, int>> wd;
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            const double s = weight(i, j);
            if (std::isinf(s)) continue;
            wd.emplace_back(ref_distance(grid, i, j) * s, j);
        }
        if (wd.empty()) throw std::invalid_argument("empty neighborhood");
        std::sort(wd.begin(), wd.end());
        const int k = std::min<std::size_t>(cfg.knn, wd.size());
        double acc = 0.0;
        for (int r = 0; r < k; ++r) acc += wd[r].first;
        rho[i] = std::exp(-acc / k);
    }

    // delta: weighted distance to the nearest strictly denser token in
    // the neighborhood, inf when none exists
    std::vector<double> delta(n), gamma(n);
    for (int i = 0; i < n; ++i) {
        double best = kInf;
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            // same equal-density index ordering as the main path
            if (!(rho[j] > rho[i] || (rho[j] == rho[i] && j < i))) continue;
            const double s = weight(i, j);
            if (std::isinf(s)) continue;
            const double d = ref_distance(grid, i, j) * s;
            if (d < best) best = d;
        }
        delta[i] = best;
        gamma[i] = std::isinf(best) ? kInf : rho[i] * best;
    }

    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        const bool ia = std::isinf(gamma[a]), ib = std::isinf(gamma[b]);
        if (ia != ib) return ia;
        if (ia) {
            if (rho[a] != rho[b]) return rho[a] > rho[b];
            return a < b;
        }
        if (gamma[a] != gamma[b]) return gamma[a] > gamma[b];
        if (rho[a] != rho[b]) return rho[a] > rho[b];
        return a < b;
    });

    const int m = cfg.num_clusters;
    ClusterAssignment asg;
    asg.centers.assign(order.begin(), order.begin() + m);
    asg.assignment.assign(n, -1);
    asg.fallback.assign(n, 0);
    std::vector<int> cluster_of(n, -1);
    for (int c = 0; c < m; ++c) cluster_of[asg.centers[c]] = c;

    for (int i = 0; i < n; ++i) {
        if (cluster_of[i] >= 0) {
            asg.assignment[i] = cluster_of[i];
            continue;
        }
        double best = kInf;
        int best_center = std::numeric_limits<int>::max();
        int best_cluster = -1;
        for (int c = 0; c < m; ++c) {
            const int j = asg.centers[c];
            const double s = weight(i, j);
            if (std::isinf(s)) continue;
            const double d = ref_distance(grid, i, j) * s;
            if (d < best || (d == best && j < best_center)) {
                best = d;
                best_center = j;
                best_cluster = c;
            }
        }
        if (best_cluster < 0) {
            for (int c = 0; c < m; ++c) {
                const int j = asg.centers[c];
                const double d = ref_distance(grid, i, j);
                if (d < best || (d == best && j < best_center)) {
                    best = d;
                    best_center = j;
                    best_cluster = c;
                }
            }
            asg.fallback[i] = 1;
        }
        asg.assignment[i] = best_cluster;
    }

    asg.sizes.assign(m, 0);
    for (auto a : asg.assignment) ++asg.sizes[a];
    asg.fallback_count = 0;
    for (auto f : asg.fallback) asg.fallback_count += f;
    return asg;
}

ReducedSequence brute_force_dpc_reduce(const TokenGrid& grid,
                                       const DpcConfig& cfg) {
    ClusterAssignment asg = brute_force_dpc(grid, cfg);
    const int m = asg.num_clusters();
    ReducedSequence red;
    red.dim = grid.dim;
    red.weights = asg.sizes;
    red.assignment = asg;
    red.reps.assign(static_cast<std::size_t>(m) * grid.dim, 0.0f);
    for (int c = 0; c < m; ++c) {
        std::vector<int> members;
        for (int i = 0; i < asg.num_tokens(); ++i)
            if (asg.assignment[i] == c) members.push_back(i);
        float* dst = red.reps.data() + static_cast<std::size_t>(c) * grid.dim;
        if (members.size() == 1) {
            auto src = grid.token(members[0]);
            std::copy(src.begin(), src.end(), dst);
            continue;
        }
        std::vector<double> acc(grid.dim, 0.0);
        for (int i : members) {
            auto src = grid.token(i);
            for (int d = 0; d < grid.dim; ++d) acc[d] += src[d];
        }
        for (int d = 0; d < grid.dim; ++d)
            dst[d] = static_cast<float>(acc[d] / members.size());
    }
    return red;
}

namespace {

// Farthest-point seeding: seeded uniform first pick, then repeatedly
// the token maximizing min distance to chosen centers, ties by lowest
// index.
std::vector<int> farthest_point_seed(const TokenGrid& grid, int m,
                                     std::uint64_t seed) {
    const int n = grid.tokens();
    std::mt19937_64 rng(seed);
    std::vector<int> centers;
    centers.push_back(
        static_cast<int>(std::uniform_int_distribution<int>(0, n - 1)(rng)));
    std::vector<double> min_d(n, kInf);
    while (static_cast<int>(centers.size()) < m) {
        const int last = centers.back();
        for (int i = 0; i < n; ++i)
            min_d[i] = std::min(
                min_d[i],
                ref_sq_distance(grid.token(i).data(), grid.token(last).data(),
                                grid.dim));
        int best = -1;
        double best_d = -1.0;
        for (int i = 0; i < n; ++i)
            if (min_d[i] > best_d) {
                best_d = min_d[i];
                best = i;
            }
        centers.push_back(best);
    }
    return centers;
}

}  // namespace

ReducedSequence kmeans_baseline(const TokenGrid& grid, int m, int iters,
                                std::uint64_t seed) {
    const int n = grid.tokens();
    const int dim = grid.dim;
    if (m < 1 || m > n) throw std::invalid_argument("M must be in [1, N]");
    if (iters < 1) throw std::invalid_argument("iters must be >= 1");

    std::vector<std::vector<double>> centroids(m, std::vector<double>(dim));
    {
        auto seeds = farthest_point_seed(grid, m, seed);
        for (int c = 0; c < m; ++c) {
            auto t = grid.token(seeds[c]);
            for (int d = 0; d < dim; ++d) centroids[c][d] = t[d];
        }
    }

    std::vector<std::int32_t> assign(n, 0);
    auto assign_all = [&] {
        for (int i = 0; i < n; ++i) {
            auto t = grid.token(i);
            double best = kInf;
            int best_c = 0;
            for (int c = 0; c < m; ++c) {
                double s = 0.0;
                for (int d = 0; d < dim; ++d) {
                    const double diff = t[d] - centroids[c][d];
                    s += diff * diff;
                }
                if (s < best) {
                    best = s;
                    best_c = c;
                }
            }
            assign[i] = best_c;
        }
    };
    auto fix_empties = [&] {
        std::vector<int> counts(m, 0);
        for (auto a : assign) ++counts[a];
        for (int c = 0; c < m; ++c) {
            if (counts[c] > 0) continue;
            // re-seed from the token farthest from its centroid, skip
            // tokens that are sole members of their cluster
            int far = -1;
            double far_d = -1.0;
            for (int i = 0; i < n; ++i) {
                if (counts[assign[i]] <= 1) continue;
                auto t = grid.token(i);
                double s = 0.0;
                for (int d = 0; d < dim; ++d) {
                    const double diff = t[d] - centroids[assign[i]][d];
                    s += diff * diff;
                }
                if (s > far_d) {
                    far_d = s;
                    far = i;
                }
            }
            --counts[assign[far]];
            assign[far] = c;
            ++counts[c];
            auto t = grid.token(far);
            for (int d = 0; d < dim; ++d) centroids[c][d] = t[d];
        }
    };
    auto update_centroids = [&] {
        std::vector<int> counts(m, 0);
        for (auto& c : centroids) std::fill(c.begin(), c.end(), 0.0);
        for (int i = 0; i < n; ++i) {
            auto t = grid.token(i);
            auto& c = centroids[assign[i]];
            for (int d = 0; d < dim; ++d) c[d] += t[d];
            ++counts[assign[i]];
        }
        for (int c = 0; c < m; ++c)
            for (int d = 0; d < dim; ++d) centroids[c][d] /= counts[c];
    };

    for (int it = 0; it < iters; ++it) {
        assign_all();
        fix_empties();
        update_centroids();
    }
    assign_all();
    fix_empties();

    ClusterAssignment asg;
    asg.assignment = assign;
    asg.centers.assign(m, -1);
    for (int i = 0; i < n; ++i)
        if (asg.centers[assign[i]] < 0) asg.centers[assign[i]] = i;
    asg.sizes.assign(m, 0);
    for (auto a : assign) ++asg.sizes[a];
    asg.fallback.assign(n, 0);
    TokenGrid g = grid;  // merge_tokens reuses the member-mean contract
    return merge_tokens(g, asg);
}

double kmeans_objective(const TokenGrid& grid, const ReducedSequence& red) {
    double obj = 0.0;
    for (int i = 0; i < grid.tokens(); ++i) {
        const int c = red.assignment.assignment[i];
        obj += ref_sq_distance(
            grid.token(i).data(),
            red.reps.data() + static_cast<std::size_t>(c) * red.dim, red.dim);
    }
    return obj;
}

SimilarityReport reconstruction_similarity(const TokenGrid& reference,
                                           const TokenGrid& reconstructed) {
    if (reference.height != reconstructed.height ||
        reference.width != reconstructed.width ||
        reference.dim != reconstructed.dim)
        throw std::invalid_argument("shape mismatch");
    SimilarityReport rep;
    double acc = 0.0;
    for (int i = 0; i < reference.tokens(); ++i)
        acc += cosine(reference.token(i).data(), reconstructed.token(i).data(),
                      reference.dim);
    rep.mean_cosine = acc / reference.tokens();
    return rep;
}

SimilarityPreservation pairwise_similarity_preservation(
    const TokenGrid& input_features, const TokenGrid& output_features,
    std::uint64_t seed) {
    if (input_features.tokens() != output_features.tokens())
        throw std::invalid_argument("token count mismatch");
    const int n = input_features.tokens();
    if (n < 2) throw std::invalid_argument("need at least 2 tokens");

    auto bin_of = [](double c) {
        int b = static_cast<int>(std::floor((c + 1.0) / 0.2));
        return std::clamp(b, 0, 9);
    };

    SimilarityPreservation out;
    out.retention.assign(10, 0.0);
    out.pairs.assign(10, 0);
    std::vector<std::int64_t> same(10, 0);

    auto tally = [&](int i, int j) {
        const int bi = bin_of(cosine(input_features.token(i).data(),
                                     input_features.token(j).data(),
                                     input_features.dim));
        const int bo = bin_of(cosine(output_features.token(i).data(),
                                     output_features.token(j).data(),
                                     output_features.dim));
        ++out.pairs[bi];
        if (bi == bo) ++same[bi];
    };

    if (n <= 1024) {
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) tally(i, j);
    } else {
        std::mt19937_64 rng(seed);
        std::uniform_int_distribution<int> pick(0, n - 1);
        for (int s = 0; s < 1000000; ++s) {
            int i = pick(rng), j = pick(rng);
            if (i == j) {
                --s;
                continue;
            }
            tally(i, j);
        }
    }
    for (int b = 0; b < 10; ++b)
        out.retention[b] =
            out.pairs[b] ? static_cast<double>(same[b]) / out.pairs[b] : 0.0;
    return out;
}

AssignmentStats assignment_stats(const ClusterAssignment& asg) {
    AssignmentStats stats;
    for (auto s : asg.sizes) ++stats.count[s];
    const double m = asg.num_clusters();
    for (auto& [size, cnt] : stats.count) stats.fraction[size] = cnt / m;
    auto it = stats.fraction.find(1);
    stats.singleton_fraction = it == stats.fraction.end() ? 0.0 : it->second;
    return stats;
}

std::string SimilarityReport::to_json() const {
    nlohmann::json j = {{"mean_cosine", mean_cosine}};
    if (!per_layer.empty()) j["per_layer"] = per_layer;
    return j.dump(2) + "\n";
}

std::string SimilarityPreservation::to_json() const {
    nlohmann::json j = {{"retention", retention}, {"pairs", pairs}};
    return j.dump(2) + "\n";
}

std::string AssignmentStats::to_json() const {
    nlohmann::json hist = nlohmann::json::array();
    for (auto& [size, cnt] : count)
        hist.push_back({{"size", size},
                        {"y2", cnt},
                        {"y1", fraction.at(size)}});
    nlohmann::json j = {{"histogram", hist},
                        {"singleton_fraction", singleton_fraction}};
    return j.dump(2) + "\n";
}

std::string AssignmentStats::to_csv() const {
    std::ostringstream out;
    out << "size,y1,y2\n";
    for (auto& [size, cnt] : count)
        out << size << ',' << fraction.at(size) << ',' << cnt << '\n';
    return out.str();
}

}  // namespace ailurus
