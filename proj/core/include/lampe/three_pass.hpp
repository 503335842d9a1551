#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lampe/attention.hpp"
#include "lampe/config.hpp"
#include "lampe/pe_map.hpp"
#include "lampe/rotary.hpp"

namespace lampe {

/// Everything one decomposed run needs: the region partition realized as
/// pair predicates, plus per-pass rotary position vectors. Predicates and
/// positions both come from the same pe_map definitions, which is what makes
/// pass disjointness checkable instead of assumed.
struct PassPlan {
    MappingConfig cfg;
    RegionPartition partition;

    std::vector<std::int64_t> head_q_pos;  // raw indices
    std::vector<std::int64_t> head_k_pos;
    std::vector<std::int64_t> mid_q_pos;   // floor(k*i + b)
    std::vector<std::int64_t> mid_k_pos;   // floor(k*j)
    std::vector<std::int64_t> tail_q_pos;  // m - l + i, only for rows >= l - s2
    std::vector<std::int64_t> tail_k_pos;  // raw indices

    std::int64_t mid_rows_begin() const noexcept { return cfg.s1; }
    std::int64_t tail_rows_begin() const noexcept { return cfg.l - cfg.s2; }

    PairFilter head_filter() const;
    PairFilter middle_filter() const;
    PairFilter tail_filter() const;

    static PassPlan from_config(const MappingConfig& cfg);
};

/// Pairs with 0 <= i - j <= s1, raw positions. Covers all rows.
PartialAttention run_head_pass(const AttentionBatch& batch, const PassPlan& plan,
                               const RotaryBasis& basis);

/// Pairs with s1 < i - j < l - s2, compressed positions. Covers rows
/// [s1, l); row s1 has no middle keys and stays -inf.
PartialAttention run_middle_pass(const AttentionBatch& batch, const PassPlan& plan,
                                 const RotaryBasis& basis);

/// Pairs with i - j >= l - s2, shifted query positions. Covers rows
/// [l - s2, l); empty when s2 = 0.
PartialAttention run_tail_pass(const AttentionBatch& batch, const PassPlan& plan,
                               const RotaryBasis& basis);

/// Log-sum-exp merge of two partials over the same rows with disjoint
/// visited keys: sigmoid-gated blend, stable combined lse, -inf acting as
/// identity.
PartialAttention merge_two(const PartialAttention& a, const PartialAttention& b);

/// Three-way merge in the per-limb gate form
///   gate_r = 1 / (1 + exp(lse_s - lse_r) + exp(lse_t - lse_r));
/// algebraically identical to merge_two(merge_two(a, b), c).
PartialAttention merge_three(const PartialAttention& a, const PartialAttention& b,
                             const PartialAttention& c);

constexpr unsigned kPassHead = 1u;
constexpr unsigned kPassMiddle = 2u;
constexpr unsigned kPassTail = 4u;

/// Final merged attention with per-row pass provenance:
/// rows [0, s1) head-only, [s1, l-s2) head+middle, [l-s2, l) all three.
struct MergedAttention {
    int heads = 0;
    std::int64_t seq_len = 0;
    int head_dim = 0;
    std::vector<double> output;        // H x l x D
    std::vector<unsigned> provenance;  // per row, kPass* bitmask

    std::span<const double> output_row(int h, std::int64_t i) const {
        const std::size_t off = (static_cast<std::size_t>(h) * static_cast<std::size_t>(seq_len) +
                                 static_cast<std::size_t>(i)) * static_cast<std::size_t>(head_dim);
        return {output.data() + off, static_cast<std::size_t>(head_dim)};
    }
};

/// The full decomposed pipeline; equals dense_oracle_attention on
/// build_index_pe_matrix(cfg) to tight tolerance.
MergedAttention lampe_attention(const AttentionBatch& batch, const MappingConfig& cfg,
                                const RotaryBasis& basis);

/// One-shot verification record comparing the decomposition to the dense
/// oracle, emitted by the CLI as JSON.
struct EquivalenceReport {
    MappingConfig cfg;
    double max_abs_error = 0.0;
    std::int64_t head_pairs = 0;
    std::int64_t middle_pairs = 0;
    std::int64_t tail_pairs = 0;
    bool disjointness_ok = false;
    bool monotonicity_ok = false;
    double head_ms = 0.0;
    double middle_ms = 0.0;
    double tail_ms = 0.0;
    double merge_ms = 0.0;
    double oracle_ms = 0.0;
};

EquivalenceReport run_equivalence_check(const AttentionBatch& batch, const MappingConfig& cfg,
                                        const RotaryBasis& basis);

/// include_timings = false keeps the JSON byte-stable across reruns.
std::string report_to_json(const EquivalenceReport& report, bool include_timings);

}  // namespace lampe
