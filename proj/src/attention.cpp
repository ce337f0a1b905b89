#include "ailurus/attention.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <fstream>
#include <random>
#include <stdexcept>

#include <json.hpp>

#include "ailurus/io_util.hpp"
#include "ailurus/parallel.hpp"

namespace ailurus {

WeightedSequence WeightedSequence::uniform(std::vector<float> tokens,
                                           int dim) {
    WeightedSequence seq;
    if (dim < 1 || tokens.size() % dim != 0)
        throw std::invalid_argument("token buffer not a multiple of dim");
    seq.dim = dim;
    seq.log_weights.assign(tokens.size() / dim, 0.0);
    seq.tokens = std::move(tokens);
    return seq;
}

void BlockWeights::validate() const {
    if (dim < 1 || heads < 1 || dim % heads != 0)
        throw std::invalid_argument("heads must divide dim");
    const std::size_t d = dim, h = 4u * d;
    if (wq.size() != d * d || wk.size() != d * d || wv.size() != d * d ||
        wo.size() != d * d || w_mlp1.size() != d * h ||
        w_mlp2.size() != h * d || b_mlp1.size() != h || b_mlp2.size() != d ||
        ln1_gamma.size() != d || ln1_beta.size() != d ||
        ln2_gamma.size() != d || ln2_beta.size() != d)
        throw std::invalid_argument("block weight shape mismatch");
}

namespace {

// y[rows x out] = x[rows x in] * w[in x out] + b, double accumulation
void matmul(const std::vector<float>& x, const std::vector<float>& w,
            const float* bias, int rows, int in, int out,
            std::vector<float>& y, int threads) {
    y.resize(static_cast<std::size_t>(rows) * out);
    parallel_for(
        static_cast<std::size_t>(rows),
        [&](std::size_t r) {
            const float* xr = x.data() + r * in;
            float* yr = y.data() + r * out;
            std::vector<double> acc(out, 0.0);
            for (int i = 0; i < in; ++i) {
                const double xv = xr[i];
                const float* wr = w.data() + static_cast<std::size_t>(i) * out;
                for (int o = 0; o < out; ++o) acc[o] += xv * wr[o];
            }
            for (int o = 0; o < out; ++o)
                yr[o] = static_cast<float>(acc[o] +
                                           (bias ? bias[o] : 0.0f));
        },
        threads);
}

void layer_norm(const std::vector<float>& x, const std::vector<float>& gamma,
                const std::vector<float>& beta, int rows, int dim,
                std::vector<float>& y, int threads) {
    constexpr double kEps = 1e-5;
    y.resize(x.size());
    parallel_for(
        static_cast<std::size_t>(rows),
        [&](std::size_t r) {
            const float* xr = x.data() + r * dim;
            float* yr = y.data() + r * dim;
            double mean = 0.0;
            for (int d = 0; d < dim; ++d) mean += xr[d];
            mean /= dim;
            double var = 0.0;
            for (int d = 0; d < dim; ++d) {
                const double c = xr[d] - mean;
                var += c * c;
            }
            var /= dim;
            const double inv = 1.0 / std::sqrt(var + kEps);
            for (int d = 0; d < dim; ++d)
                yr[d] = static_cast<float>((xr[d] - mean) * inv * gamma[d] +
                                           beta[d]);
        },
        threads);
}

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x / std::sqrt(2.0))); }

}  // namespace

std::vector<float> weighted_attention(const std::vector<float>& q_seq,
                                      const std::vector<float>& k_seq,
                                      const std::vector<float>& v_seq,
                                      const std::vector<double>& log_weights,
                                      int dim, int num_heads, double scale,
                                      int threads) {
    if (dim < 1 || num_heads < 1 || dim % num_heads != 0)
        throw std::invalid_argument("heads must divide dim");
    if (q_seq.size() % dim != 0 || k_seq.size() % dim != 0 ||
        k_seq.size() != v_seq.size())
        throw std::invalid_argument("sequence shape mismatch");
    const int nq = static_cast<int>(q_seq.size()) / dim;
    const int nk = static_cast<int>(k_seq.size()) / dim;
    if (static_cast<int>(log_weights.size()) != nk)
        throw std::invalid_argument("log_weights length mismatch");
    const int hd = dim / num_heads;

    std::vector<float> out(q_seq.size());
    std::vector<std::uint8_t> bad(nq, 0);
    parallel_for(
        static_cast<std::size_t>(nq),
        [&](std::size_t qi) {
            std::vector<double> logits(nk);
            std::vector<double> acc(hd);
            for (int h = 0; h < num_heads; ++h) {
                const int off = h * hd;
                const float* q = q_seq.data() + qi * dim + off;
                double row_max = -std::numeric_limits<double>::infinity();
                for (int j = 0; j < nk; ++j) {
                    const float* k = k_seq.data() +
                                     static_cast<std::size_t>(j) * dim + off;
                    double dot = 0.0;
                    for (int d = 0; d < hd; ++d)
                        dot += static_cast<double>(q[d]) * k[d];
                    const double logit = dot / scale + log_weights[j];
                    if (!std::isfinite(logit)) {
                        bad[qi] = 1;
                        return;
                    }
                    logits[j] = logit;
                    row_max = std::max(row_max, logit);
                }
                double denom = 0.0;
                for (int j = 0; j < nk; ++j) {
                    logits[j] = std::exp(logits[j] - row_max);
                    denom += logits[j];
                }
                std::fill(acc.begin(), acc.end(), 0.0);
                for (int j = 0; j < nk; ++j) {
                    const double a = logits[j] / denom;
                    const float* v = v_seq.data() +
                                     static_cast<std::size_t>(j) * dim + off;
                    for (int d = 0; d < hd; ++d) acc[d] += a * v[d];
                }
                float* o = out.data() + qi * dim + off;
                for (int d = 0; d < hd; ++d)
                    o[d] = static_cast<float>(acc[d]);
            }
        },
        threads);
    for (auto b : bad)
        if (b) throw std::runtime_error("non-finite attention logits");
    return out;
}

WeightedSequence block_forward(const WeightedSequence& seq,
                               const BlockWeights& w, int threads) {
    w.validate();
    if (seq.dim != w.dim) throw std::invalid_argument("dim mismatch");
    const int n = seq.size();
    const int dim = w.dim;
    const double scale = std::sqrt(static_cast<double>(dim) / w.heads);

    std::vector<float> normed, q, k, v, attn, proj;
    layer_norm(seq.tokens, w.ln1_gamma, w.ln1_beta, n, dim, normed, threads);
    matmul(normed, w.wq, nullptr, n, dim, dim, q, threads);
    matmul(normed, w.wk, nullptr, n, dim, dim, k, threads);
    matmul(normed, w.wv, nullptr, n, dim, dim, v, threads);
    attn = weighted_attention(q, k, v, seq.log_weights, dim, w.heads, scale,
                              threads);
    matmul(attn, w.wo, nullptr, n, dim, dim, proj, threads);

    WeightedSequence out;
    out.dim = dim;
    out.log_weights = seq.log_weights;
    out.tokens.resize(seq.tokens.size());
    for (std::size_t i = 0; i < out.tokens.size(); ++i)
        out.tokens[i] = seq.tokens[i] + proj[i];

    std::vector<float> normed2, hidden, mlp;
    layer_norm(out.tokens, w.ln2_gamma, w.ln2_beta, n, dim, normed2, threads);
    matmul(normed2, w.w_mlp1, w.b_mlp1.data(), n, dim, 4 * dim, hidden,
           threads);
    for (auto& h : hidden) h = static_cast<float>(gelu(h));
    matmul(hidden, w.w_mlp2, w.b_mlp2.data(), n, 4 * dim, dim, mlp, threads);
    for (std::size_t i = 0; i < out.tokens.size(); ++i)
        out.tokens[i] += mlp[i];
    return out;
}

std::vector<BlockWeights> init_block_weights(int dim, int heads,
                                             int layer_count,
                                             std::uint64_t seed) {
    if (dim < 1 || heads < 1 || dim % heads != 0)
        throw std::invalid_argument("heads must divide dim");
    std::mt19937_64 rng(seed);
    std::normal_distribution<float> normal(0.0f,
                                           1.0f / std::sqrt(static_cast<float>(dim)));
    auto fill = [&](std::vector<float>& t, std::size_t count) {
        t.resize(count);
        for (auto& v : t) v = normal(rng);
    };
    std::vector<BlockWeights> layers(layer_count);
    const std::size_t d = dim;
    for (auto& w : layers) {
        w.dim = dim;
        w.heads = heads;
        fill(w.wq, d * d);
        fill(w.wk, d * d);
        fill(w.wv, d * d);
        fill(w.wo, d * d);
        fill(w.w_mlp1, d * 4 * d);
        fill(w.w_mlp2, 4 * d * d);
        w.b_mlp1.assign(4 * d, 0.0f);
        w.b_mlp2.assign(d, 0.0f);
        w.ln1_gamma.assign(d, 1.0f);
        w.ln1_beta.assign(d, 0.0f);
        w.ln2_gamma.assign(d, 1.0f);
        w.ln2_beta.assign(d, 0.0f);
    }
    return layers;
}

namespace {

const char* const kTensorNames[] = {"wq",     "wk",     "wv",      "wo",
                                    "w_mlp1", "b_mlp1", "w_mlp2",  "b_mlp2",
                                    "ln1_gamma", "ln1_beta", "ln2_gamma",
                                    "ln2_beta"};

std::vector<std::vector<float> BlockWeights::*> tensor_members() {
    return {&BlockWeights::wq,       &BlockWeights::wk,
            &BlockWeights::wv,       &BlockWeights::wo,
            &BlockWeights::w_mlp1,   &BlockWeights::b_mlp1,
            &BlockWeights::w_mlp2,   &BlockWeights::b_mlp2,
            &BlockWeights::ln1_gamma, &BlockWeights::ln1_beta,
            &BlockWeights::ln2_gamma, &BlockWeights::ln2_beta};
}

}  // namespace

void save_block_weights(const std::vector<BlockWeights>& layers,
                        const std::string& path) {
    std::string payload;
    nlohmann::json tensors = nlohmann::json::array();
    auto members = tensor_members();
    for (std::size_t l = 0; l < layers.size(); ++l) {
        layers[l].validate();
        for (std::size_t t = 0; t < members.size(); ++t) {
            const auto& buf = layers[l].*members[t];
            tensors.push_back({{"name", "layer" + std::to_string(l) + "." +
                                            kTensorNames[t]},
                               {"offset", payload.size() / sizeof(float)},
                               {"count", buf.size()}});
            payload.append(reinterpret_cast<const char*>(buf.data()),
                           buf.size() * sizeof(float));
        }
    }
    nlohmann::json header = {{"dim", layers.empty() ? 0 : layers[0].dim},
                             {"heads", layers.empty() ? 0 : layers[0].heads},
                             {"layers", layers.size()},
                             {"dtype", "f32le"},
                             {"tensors", tensors}};
    write_file_atomic(path + ".json", header.dump(2) + "\n");
    write_file_atomic(path + ".bin", payload);
}

std::vector<BlockWeights> load_block_weights(const std::string& path) {
    std::ifstream hf(path + ".json");
    if (!hf) throw std::runtime_error("cannot open header: " + path + ".json");
    nlohmann::json header = nlohmann::json::parse(hf);
    const int dim = header.at("dim").get<int>();
    const int heads = header.at("heads").get<int>();
    const std::size_t count = header.at("layers").get<std::size_t>();

    std::ifstream bf(path + ".bin", std::ios::binary);
    if (!bf) throw std::runtime_error("cannot open payload: " + path + ".bin");
    std::vector<char> payload((std::istreambuf_iterator<char>(bf)),
                              std::istreambuf_iterator<char>());

    std::vector<BlockWeights> layers(count);
    auto members = tensor_members();
    std::size_t pos = 0;
    for (auto& w : layers) {
        w.dim = dim;
        w.heads = heads;
        const std::size_t d = dim;
        const std::size_t sizes[] = {d * d, d * d, d * d, d * d, d * 4 * d,
                                     4 * d, 4 * d * d, d, d, d, d, d};
        for (std::size_t t = 0; t < members.size(); ++t) {
            auto& buf = w.*members[t];
            buf.resize(sizes[t]);
            const std::size_t bytes = sizes[t] * sizeof(float);
            if (pos + bytes > payload.size())
                throw std::runtime_error("truncated payload");
            std::memcpy(buf.data(), payload.data() + pos, bytes);
            pos += bytes;
        }
        w.validate();
    }
    if (pos != payload.size())
        throw std::runtime_error("payload larger than header");
    return layers;
}

}  // namespace ailurus
