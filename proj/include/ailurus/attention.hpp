#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace ailurus {

// Token sequence with per-token multiplicity expressed as ln(m_n).
struct WeightedSequence {
    std::vector<float> tokens;       // size() x dim
    int dim = 0;
    std::vector<double> log_weights; // ln(m_n) >= 0

    int size() const { return static_cast<int>(log_weights.size()); }
    static WeightedSequence uniform(std::vector<float> tokens, int dim);
};

// One pre-norm transformer encoder block: q/k/v/output projections,
// GELU MLP with ratio 4, two layer norms.
struct BlockWeights {
    int dim = 0;
    int heads = 0;
    std::vector<float> wq, wk, wv, wo;     // dim x dim, row-major [in][out]
    std::vector<float> w_mlp1, b_mlp1;     // dim x 4*dim, 4*dim
    std::vector<float> w_mlp2, b_mlp2;     // 4*dim x dim, dim
    std::vector<float> ln1_gamma, ln1_beta;
    std::vector<float> ln2_gamma, ln2_beta;

    void validate() const;
};

// Multiplicity-weighted multi-head self-attention. Logits
// q_i . k_j / scale are biased by log_weights[j] before the row
// softmax, which matches multiplying softmax terms by m_j. With all
// m_j = 1 this is plain softmax attention.
std::vector<float> weighted_attention(const std::vector<float>& q_seq,
                                      const std::vector<float>& k_seq,
                                      const std::vector<float>& v_seq,
                                      const std::vector<double>& log_weights,
                                      int dim, int num_heads, double scale,
                                      int threads = 0);

// x + Attn(LN1(x)); then + MLP(LN2(.)). log_weights pass through.
WeightedSequence block_forward(const WeightedSequence& seq,
                               const BlockWeights& weights, int threads = 0);

// Seeded Gaussian init scaled by 1/sqrt(dim); LN gamma = 1, beta = 0,
// MLP biases 0.
std::vector<BlockWeights> init_block_weights(int dim, int heads,
                                             int layer_count,
                                             std::uint64_t seed);

// f32le binary + json sidecar naming each tensor, same convention as
// the grid format. `path` is the stem.
void save_block_weights(const std::vector<BlockWeights>& layers,
                        const std::string& path);
std::vector<BlockWeights> load_block_weights(const std::string& path);

}  // namespace ailurus
