#pragma once

#include <cstdint>
#include <string>

#include "lampe/errors.hpp"

namespace lampe {

/// All scalar parameters of one remapping instance.
///
/// l  input length, m  mapping length, s1/s2  head/tail region widths,
/// n  pretraining context window (informational, 0 = unspecified).
///
/// Valid iff:
///   1 <= m <= l, s1 >= 0, s2 >= 0, s1 + s2 < l, and additionally for
///   m < l: s1 + s2 < m and l > s1 + s2 + 1 (otherwise the middle region
///   degenerates and the config is rejected; m = l is an identity
///   passthrough where any s1 + s2 < l is accepted).
struct MappingConfig {
    std::int64_t l = 0;
    std::int64_t m = 0;
    std::int64_t s1 = 0;
    std::int64_t s2 = 0;
    std::int64_t n = 0;

    /// Throws invalid_config naming the violated rule.
    void validate() const;

    bool is_valid() const noexcept;

    /// m = l collapses every region mapping to the raw offset i - j.
    bool is_identity() const noexcept { return m == l; }

    std::string str() const;
};

/// Clamp a requested mapping length into [1, l]: a model whose sigmoid fit
/// yields m >= l needs no remapping, so the config degenerates to identity.
std::int64_t clamp_mapping_length(std::int64_t m, std::int64_t l);

/// SelfExtend baseline parameters: local window w, group size G,
/// pretraining context window n.
struct SelfExtendConfig {
    std::int64_t w = 0;
    std::int64_t G = 1;
    std::int64_t n = 0;

    void validate() const;

    /// Maximum supported input length: (n - w) * G + w.
    std::int64_t extended_window() const noexcept { return (n - w) * G + w; }
};

}  // namespace lampe
