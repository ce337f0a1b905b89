#include "ailurus/dpc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "ailurus/parallel.hpp"

namespace ailurus {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

void DpcConfig::validate(int n_tokens) const {
    if (num_clusters < 1 || num_clusters > n_tokens)
        throw std::invalid_argument("num_clusters must be in [1, N]");
    if (!(alpha > 0.0 && alpha <= 1.0))
        throw std::invalid_argument("alpha must be in (0, 1]");
    if (lambda < 1) throw std::invalid_argument("lambda must be >= 1");
    if (knn < 1 || knn > lambda)
        throw std::invalid_argument("knn must be in [1, lambda]");
}

void ClusterAssignment::validate() const {
    const int m = num_clusters();
    const int n = num_tokens();
    if (m < 1) throw std::invalid_argument("no clusters");
    if (static_cast<int>(sizes.size()) != m)
        throw std::invalid_argument("sizes length mismatch");
    std::vector<std::int32_t> counted(m, 0);
    for (int i = 0; i < n; ++i) {
        if (assignment[i] < 0 || assignment[i] >= m)
            throw std::invalid_argument("assignment id out of range");
        ++counted[assignment[i]];
    }
    for (int c = 0; c < m; ++c) {
        if (counted[c] != sizes[c])
            throw std::invalid_argument("sizes inconsistent with assignment");
        if (sizes[c] < 1) throw std::invalid_argument("empty cluster");
        if (centers[c] < 0 || centers[c] >= n)
            throw std::invalid_argument("center index out of range");
        if (assignment[centers[c]] != c)
            throw std::invalid_argument("center not in its own cluster");
    }
}

std::string ClusterAssignment::serialize() const {
    std::ostringstream out;
    out << num_clusters() << ' ' << num_tokens() << '\n';
    for (int c = 0; c < num_clusters(); ++c)
        out << centers[c] << (c + 1 == num_clusters() ? '\n' : ' ');
    for (int i = 0; i < num_tokens(); ++i)
        out << assignment[i] << (i + 1 == num_tokens() ? '\n' : ' ');
    return out.str();
}

ClusterAssignment ClusterAssignment::parse(const std::string& text) {
    std::istringstream in(text);
    int m = 0, n = 0;
    if (!(in >> m >> n) || m < 1 || n < m)
        throw std::invalid_argument("bad assignment header");
    ClusterAssignment asg;
    asg.centers.resize(m);
    asg.assignment.resize(n);
    for (auto& c : asg.centers)
        if (!(in >> c)) throw std::invalid_argument("truncated center list");
    for (auto& a : asg.assignment)
        if (!(in >> a)) throw std::invalid_argument("truncated assignment");
    asg.sizes.assign(m, 0);
    for (auto a : asg.assignment) {
        if (a < 0 || a >= m)
            throw std::invalid_argument("assignment id out of range");
        ++asg.sizes[a];
    }
    asg.fallback.assign(n, 0);
    asg.validate();
    return asg;
}

double spatial_weight(int rank, int lambda, double alpha) {
    if (rank < 1 || rank > lambda) return kInf;
    return (1.0 - alpha) * rank / lambda + alpha;
}

double feature_distance(std::span<const float> a, std::span<const float> b) {
    double acc = 0.0;
    for (std::size_t d = 0; d < a.size(); ++d) {
        const double diff = static_cast<double>(a[d]) - b[d];
        acc += diff * diff;
    }
    return std::sqrt(acc);
}

std::vector<double> local_density(const TokenGrid& grid,
                                  const NeighborIndex& nbr,
                                  const DpcConfig& cfg, int threads) {
    const int n = grid.tokens();
    if (nbr.per_token < 1) throw std::invalid_argument("empty neighbor list");
    const int k = std::min(cfg.knn, nbr.per_token);
    std::vector<double> rho(n);
    parallel_for(
        static_cast<std::size_t>(n),
        [&](std::size_t i) {
            auto list = nbr.list(static_cast<int>(i));
            // weighted feature distance to each spatial neighbor; all
            // finite since rank <= lambda inside the list
            std::vector<std::pair<double, std::int32_t>> wd;
            wd.reserve(list.size());
            for (std::size_t r = 0; r < list.size(); ++r) {
                const int j = list[r];
                const double w = spatial_weight(static_cast<int>(r) + 1,
                                                nbr.lambda, cfg.alpha);
                wd.emplace_back(
                    feature_distance(grid.token(static_cast<int>(i)),
                                     grid.token(j)) * w,
                    j);
            }
            // sum the k smallest in ascending (value, index) order so
            // the result is reproducible bit-for-bit
            std::sort(wd.begin(), wd.end());
            double acc = 0.0;
            for (int r = 0; r < k; ++r) acc += wd[r].first;
            rho[i] = std::exp(-acc / k);
        },
        threads);
    return rho;
}

std::vector<double> distance_indicator(const TokenGrid& grid,
                                       const std::vector<double>& rho,
                                       const NeighborIndex& nbr,
                                       const DpcConfig& cfg, int threads) {
    const int n = grid.tokens();
    std::vector<double> delta(n);
    parallel_for(
        static_cast<std::size_t>(n),
        [&](std::size_t i) {
            auto list = nbr.list(static_cast<int>(i));
            double best = kInf;
            for (std::size_t r = 0; r < list.size(); ++r) {
                const int j = list[r];
                // equal densities rank by index so exact duplicates
                // suppress each other instead of all scoring infinity
                if (!(rho[j] > rho[i] ||
                      (rho[j] == rho[i] && j < static_cast<int>(i))))
                    continue;
                const double w = spatial_weight(static_cast<int>(r) + 1,
                                                nbr.lambda, cfg.alpha);
                const double d =
                    feature_distance(grid.token(static_cast<int>(i)),
                                     grid.token(j)) * w;
                best = std::min(best, d);
            }
            delta[i] = best;
        },
        threads);
    return delta;
}

DensityScores density_scores(const TokenGrid& grid, const NeighborIndex& nbr,
                             const DpcConfig& cfg, int threads) {
    DensityScores s;
    s.rho = local_density(grid, nbr, cfg, threads);
    s.delta = distance_indicator(grid, s.rho, nbr, cfg, threads);
    s.gamma.resize(s.rho.size());
    for (std::size_t i = 0; i < s.rho.size(); ++i)
        s.gamma[i] = std::isinf(s.delta[i]) ? kInf : s.rho[i] * s.delta[i];
    return s;
}

std::vector<std::int32_t> select_centers(const DensityScores& scores, int m) {
    const int n = static_cast<int>(scores.gamma.size());
    if (m > n) throw std::invalid_argument("M exceeds token count");
    std::vector<std::int32_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        const bool ia = std::isinf(scores.gamma[a]);
        const bool ib = std::isinf(scores.gamma[b]);
        if (ia != ib) return ia;
        if (ia) {  // both infinite: descending rho, then ascending index
            if (scores.rho[a] != scores.rho[b])
                return scores.rho[a] > scores.rho[b];
            return a < b;
        }
        if (scores.gamma[a] != scores.gamma[b])
            return scores.gamma[a] > scores.gamma[b];
        if (scores.rho[a] != scores.rho[b])
            return scores.rho[a] > scores.rho[b];
        return a < b;
    });
    order.resize(m);
    return order;
}

ClusterAssignment assign_tokens(const TokenGrid& grid,
                                const std::vector<std::int32_t>& centers,
                                const NeighborIndex& nbr, const DpcConfig& cfg,
                                int threads) {
    const int n = grid.tokens();
    const int m = static_cast<int>(centers.size());
    if (m < 1) throw std::invalid_argument("zero centers");
    std::vector<std::int32_t> cluster_of(n, -1);
    for (int c = 0; c < m; ++c) {
        if (centers[c] < 0 || centers[c] >= n)
            throw std::invalid_argument("center index out of range");
        if (cluster_of[centers[c]] != -1)
            throw std::invalid_argument("duplicate center");
        cluster_of[centers[c]] = c;
    }

    ClusterAssignment asg;
    asg.centers = centers;
    asg.assignment.resize(n);
    asg.fallback.assign(n, 0);

    parallel_for(
        static_cast<std::size_t>(n),
        [&](std::size_t ti) {
            const int i = static_cast<int>(ti);
            if (cluster_of[i] >= 0) {
                asg.assignment[i] = cluster_of[i];
                return;
            }
            auto list = nbr.list(i);
            double best = kInf;
            int best_center = -1;  // token index, for the tie rule
            int best_cluster = -1;
            for (std::size_t r = 0; r < list.size(); ++r) {
                const int j = list[r];
                if (cluster_of[j] < 0) continue;
                const double w = spatial_weight(static_cast<int>(r) + 1,
                                                nbr.lambda, cfg.alpha);
                if (std::isinf(w)) continue;
                const double d =
                    feature_distance(grid.token(i), grid.token(j)) * w;
                if (d < best || (d == best && j < best_center)) {
                    best = d;
                    best_center = j;
                    best_cluster = cluster_of[j];
                }
            }
            if (best_cluster < 0) {
                // no center in the spatial neighborhood: fall back to
                // the globally feature-nearest center (pure sigma)
                for (int c = 0; c < m; ++c) {
                    const double d =
                        feature_distance(grid.token(i),
                                         grid.token(centers[c]));
                    if (d < best ||
                        (d == best && centers[c] < best_center)) {
                        best = d;
                        best_center = centers[c];
                        best_cluster = c;
                    }
                }
                asg.fallback[i] = 1;
            }
            asg.assignment[i] = best_cluster;
        },
        threads);

    asg.sizes.assign(m, 0);
    for (auto a : asg.assignment) ++asg.sizes[a];
    asg.fallback_count = 0;
    for (auto f : asg.fallback) asg.fallback_count += f;
    return asg;
}

ReducedSequence merge_tokens(const TokenGrid& grid,
                             const ClusterAssignment& asg) {
    const int m = asg.num_clusters();
    const int d = grid.dim;
    ReducedSequence red;
    red.dim = d;
    red.weights = asg.sizes;
    red.assignment = asg;
    red.reps.assign(static_cast<std::size_t>(m) * d, 0.0f);

    std::vector<std::vector<std::int32_t>> members(m);
    for (int i = 0; i < asg.num_tokens(); ++i)
        members[asg.assignment[i]].push_back(i);  // ascending token order

    for (int c = 0; c < m; ++c) {
        float* dst = red.reps.data() + static_cast<std::size_t>(c) * d;
        if (members[c].size() == 1) {
            auto src = grid.token(members[c][0]);
            std::copy(src.begin(), src.end(), dst);  // singleton: bit-exact
            continue;
        }
        std::vector<double> acc(d, 0.0);
        for (int i : members[c]) {
            auto src = grid.token(i);
            for (int k = 0; k < d; ++k) acc[k] += src[k];
        }
        const double inv = 1.0 / static_cast<double>(members[c].size());
        for (int k = 0; k < d; ++k)
            dst[k] = static_cast<float>(acc[k] * inv);
    }
    return red;
}

ReducedSequence cluster(const TokenGrid& grid, const DpcConfig& cfg,
                        int threads) {
    cfg.validate(grid.tokens());
    NeighborIndex nbr =
        spatial_neighbors(grid.height, grid.width, cfg.lambda, threads);
    DensityScores scores = density_scores(grid, nbr, cfg, threads);
    auto centers = select_centers(scores, cfg.num_clusters);
    auto asg = assign_tokens(grid, centers, nbr, cfg, threads);
    return merge_tokens(grid, asg);
}

}  // namespace ailurus
