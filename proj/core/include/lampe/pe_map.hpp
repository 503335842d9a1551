#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "lampe/config.hpp"
#include "lampe/rational.hpp"

namespace lampe {

/// The three causal-pair bands, classified by the offset d = i - j:
///   head    d <= s1
///   middle  s1 < d < l - s2
///   tail    d >= l - s2
enum class Region { head, middle, tail };

/// Linear transform of the middle region, kept as exact rationals:
///   slope  k = (m - s1 - s2) / (l - s1 - s2)
///   offset b = (l - m) * s1  / (l - s1 - s2)
/// Both share the denominator l - s1 - s2, so every floor below is a single
/// exact integer division.
struct MiddleTransform {
    Rational slope;
    Rational offset;

    static MiddleTransform from_config(const MappingConfig& cfg);

    /// floor(slope * x + offset), exact.
    std::int64_t floor_apply(std::int64_t x) const noexcept;

    /// floor(slope * x), exact.
    std::int64_t floor_slope(std::int64_t x) const noexcept;

    /// Exact boundary identities: k*s1 + b = s1 and k*(l-s2) + b = m - s2.
    bool identities_hold(const MappingConfig& cfg) const;

private:
    // Unreduced integer form used on the hot paths.
    std::int64_t num_ = 1;   // m - s1 - s2
    std::int64_t off_ = 0;   // (l - m) * s1
    std::int64_t den_ = 1;   // l - s1 - s2
};

/// Lower-triangular matrix of remapped relative positions.
/// entries[i][j] is defined for every causal pair 0 <= j <= i < l and lies
/// in [0, m - 1]; rows are monotone non-increasing in j.
///
/// Storage is deliberately uninitialized on construction (the builders
/// overwrite every entry; zero-filling hundreds of MB first doubles the
/// write traffic of large builds).
class RelPositionMatrix {
public:
    RelPositionMatrix() = default;
    explicit RelPositionMatrix(std::int64_t l);

    RelPositionMatrix(const RelPositionMatrix& other);
    RelPositionMatrix& operator=(const RelPositionMatrix& other);
    RelPositionMatrix(RelPositionMatrix&&) noexcept = default;
    RelPositionMatrix& operator=(RelPositionMatrix&&) noexcept = default;

    std::int64_t size() const noexcept { return l_; }
    std::int64_t pair_count() const noexcept { return static_cast<std::int64_t>(count_); }

    std::int64_t at(std::int64_t i, std::int64_t j) const;

    /// Row i as a contiguous span of i + 1 values, index t = column j.
    const std::int32_t* row(std::int64_t i) const noexcept { return entries_.get() + row_offset(i); }
    std::int32_t* row(std::int64_t i) noexcept { return entries_.get() + row_offset(i); }

    std::int64_t max_value() const noexcept;
    std::int64_t distinct_value_count() const;

private:
    static std::size_t row_offset(std::int64_t i) noexcept {
        return static_cast<std::size_t>(i) * (i + 1) / 2;
    }

    std::int64_t l_ = 0;
    std::size_t count_ = 0;
    std::unique_ptr<std::int32_t[]> entries_;
};

/// Remapped relative position of one causal pair: raw offset in the head
/// region, exact-rational floor compression in the middle, shifted raw
/// offset in the tail.
std::int64_t lampe_pe(std::int64_t i, std::int64_t j, const MappingConfig& cfg);

/// Single-slope compression floor(m * (i - j) / l), exact integer arithmetic.
std::int64_t adaptive_group_pe(std::int64_t i, std::int64_t j, std::int64_t l, std::int64_t m);

/// Region of the causal pair (i, j) under cfg.
Region region_of(std::int64_t i, std::int64_t j, const MappingConfig& cfg);

/// Per-region rotary position index of query row i.
/// Tail positions only exist for i >= l - s2 (they would be negative before
/// that row); requesting one earlier is a domain error.
std::int64_t query_position(std::int64_t i, Region region, const MappingConfig& cfg);

/// Per-region rotary position index of key column j.
std::int64_t key_position(std::int64_t j, Region region, const MappingConfig& cfg);

/// Matrix of lampe_pe values (offset-only form).
RelPositionMatrix build_pe_matrix(const MappingConfig& cfg);

/// Matrix of query_position - key_position values (the form the attention
/// passes actually realize). Differs from build_pe_matrix by at most 1 in
/// the middle region (floor inequality), exactly 0 elsewhere.
RelPositionMatrix build_index_pe_matrix(const MappingConfig& cfg);

/// SelfExtend baseline: raw offset inside the local window, grouped
/// w + floor((i - j - w) / G) outside it.
std::int64_t self_extend_pe(std::int64_t i, std::int64_t j, const SelfExtendConfig& cfg);

struct MonotonicityReport {
    bool pass = true;
    // First violating triple: row i with pe[i][j1] < pe[i][j2], j1 < j2.
    std::int64_t i = -1;
    std::int64_t j1 = -1;
    std::int64_t j2 = -1;
};

/// Row-wise monotonicity scan: pass iff every row is non-increasing in j.
MonotonicityReport verify_monotonicity(const RelPositionMatrix& pe);

/// Offset bands of the three regions plus exact causal-pair counts.
/// The bands are disjoint by construction and cover every causal pair.
struct RegionPartition {
    std::int64_t l = 0;
    std::int64_t head_max_offset = 0;   // head: 0 <= d <= head_max_offset
    std::int64_t tail_min_offset = 0;   // tail: d >= tail_min_offset
    std::int64_t head_pairs = 0;
    std::int64_t middle_pairs = 0;
    std::int64_t tail_pairs = 0;

    Region classify_offset(std::int64_t d) const noexcept {
        if (d <= head_max_offset) return Region::head;
        if (d >= tail_min_offset) return Region::tail;
        return Region::middle;
    }

    std::int64_t total_pairs() const noexcept { return head_pairs + middle_pairs + tail_pairs; }
};

RegionPartition region_partition(const MappingConfig& cfg);

}  // namespace lampe
