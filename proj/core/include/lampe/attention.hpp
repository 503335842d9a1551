#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include "lampe/pe_map.hpp"
#include "lampe/rotary.hpp"

namespace lampe {

/// Post-projection query/key/value tensors for one head set, H x l x D
/// row-major. scale defaults to 1/sqrt(D).
struct AttentionBatch {
    int heads = 0;
    std::int64_t seq_len = 0;
    int head_dim = 0;
    double scale = 0.0;
    std::vector<double> q;
    std::vector<double> k;
    std::vector<double> v;

    void validate() const;

    std::span<const double> q_row(int h, std::int64_t i) const { return row(q, h, i); }
    std::span<const double> k_row(int h, std::int64_t i) const { return row(k, h, i); }
    std::span<const double> v_row(int h, std::int64_t i) const { return row(v, h, i); }

private:
    std::span<const double> row(const std::vector<double>& t, int h, std::int64_t i) const {
        const std::size_t off =
            (static_cast<std::size_t>(h) * static_cast<std::size_t>(seq_len) +
             static_cast<std::size_t>(i)) * static_cast<std::size_t>(head_dim);
        return {t.data() + off, static_cast<std::size_t>(head_dim)};
    }
};

/// Deterministic batch fixture: entries uniform in [-1, 1), reproducible
/// from the u64 seed on any platform.
AttentionBatch make_random_batch(std::uint64_t seed, int heads, std::int64_t seq_len, int head_dim);

/// Attention output restricted to a subset of keys, paired with the per-row
/// log-sum-exp of the visited logits. Rows with an empty visited set carry
/// lse = -inf and a zero output row; merges treat those as identity.
struct PartialAttention {
    int heads = 0;
    int head_dim = 0;
    std::int64_t row_begin = 0;
    std::int64_t row_end = 0;
    std::vector<double> output;  // H x rows x D
    std::vector<double> lse;     // H x rows
    std::int64_t visited_pairs = 0;

    std::int64_t rows() const noexcept { return row_end - row_begin; }

    std::span<const double> output_row(int h, std::int64_t i) const;
    std::span<double> output_row(int h, std::int64_t i);
    double lse_at(int h, std::int64_t i) const;
    double& lse_at(int h, std::int64_t i);

    /// Copy of rows [begin, end), which must lie inside [row_begin, row_end).
    PartialAttention slice(std::int64_t begin, std::int64_t end) const;
};

PartialAttention make_empty_partial(int heads, int head_dim, std::int64_t row_begin,
                                    std::int64_t row_end);

/// Brute-force reference: for every causal pair the logit is evaluated in
/// pairwise form with the remapped distance pe[i][j] (rotation by -pe[i][j],
/// matching the j - i convention), then a stabilized softmax per row.
/// Returns output H x l x D and lse H x l.
struct DenseAttentionResult {
    std::vector<double> output;
    std::vector<double> lse;
};

DenseAttentionResult dense_oracle_attention(const AttentionBatch& batch,
                                            const RelPositionMatrix& pe,
                                            const RotaryBasis& basis);

using PairFilter = std::function<bool(std::int64_t i, std::int64_t j)>;

/// Sliding-window-style partial attention: queries rotated by
/// q_positions[i], keys by k_positions[j], softmax restricted to causal
/// pairs accepted by the filter. Covers rows [row_begin, row_end).
PartialAttention windowed_partial_attention(const AttentionBatch& batch,
                                            std::span<const std::int64_t> q_positions,
                                            std::span<const std::int64_t> k_positions,
                                            const PairFilter& filter, const RotaryBasis& basis,
                                            std::int64_t row_begin, std::int64_t row_end);

/// Full-row overload, rows [0, seq_len).
PartialAttention windowed_partial_attention(const AttentionBatch& batch,
                                            std::span<const std::int64_t> q_positions,
                                            std::span<const std::int64_t> k_positions,
                                            const PairFilter& filter, const RotaryBasis& basis);

/// Raw little-endian f64 payload with a JSON sidecar {H, l, D} at
/// path + ".json"; used for test fixtures.
void save_tensor(std::span<const double> data, int heads, std::int64_t seq_len, int head_dim,
                 const std::filesystem::path& path);

struct LoadedTensor {
    int heads = 0;
    std::int64_t seq_len = 0;
    int head_dim = 0;
    std::vector<double> data;
};

LoadedTensor load_tensor(const std::filesystem::path& path);

}  // namespace lampe
