#include "lampe/config.hpp"

#include <sstream>

namespace lampe {

void MappingConfig::validate() const {
    if (l < 1) throw invalid_config("l must be >= 1, got " + std::to_string(l));
    if (m < 1 || m > l) {
        throw invalid_config("m must satisfy 1 <= m <= l, got m=" + std::to_string(m) +
                             " l=" + std::to_string(l));
    }
    if (s1 < 0 || s2 < 0) {
        throw invalid_config("s1 and s2 must be >= 0, got s1=" + std::to_string(s1) +
                             " s2=" + std::to_string(s2));
    }
    if (s1 + s2 >= l) {
        throw invalid_config("s1 + s2 must be < l, got s1+s2=" + std::to_string(s1 + s2) +
                             " l=" + std::to_string(l));
    }
    if (m < l) {
        // Degenerate middle region: undefined by the mapping, rejected.
        if (m <= s1 + s2) {
            throw invalid_config("degenerate middle region: m <= s1 + s2 with m < l (m=" +
                                 std::to_string(m) + " s1+s2=" + std::to_string(s1 + s2) + ")");
        }
        if (l <= s1 + s2 + 1) {
            throw invalid_config("degenerate middle region: l <= s1 + s2 + 1 with m < l (l=" +
                                 std::to_string(l) + " s1+s2=" + std::to_string(s1 + s2) + ")");
        }
    }
    if (n < 0) throw invalid_config("n must be >= 0, got " + std::to_string(n));
}

bool MappingConfig::is_valid() const noexcept {
    try {
        validate();
        return true;
    } catch (const invalid_config&) {
        return false;
    }
}

std::string MappingConfig::str() const {
    std::ostringstream os;
    os << "{l=" << l << ", m=" << m << ", s1=" << s1 << ", s2=" << s2 << ", n=" << n << "}";
    return os.str();
}

std::int64_t clamp_mapping_length(std::int64_t m, std::int64_t l) {
    if (l < 1) throw precondition_error("clamp_mapping_length: l must be >= 1");
    if (m < 1) return 1;
    return m < l ? m : l;
}

void SelfExtendConfig::validate() const {
    if (n < 1) throw invalid_config("SelfExtend: n must be >= 1, got " + std::to_string(n));
    if (G < 1) throw invalid_config("SelfExtend: G must be >= 1, got " + std::to_string(G));
    if (w < 0 || w >= n) {
        throw invalid_config("SelfExtend: w must satisfy 0 <= w < n, got w=" + std::to_string(w) +
                             " n=" + std::to_string(n));
    }
}

}  // namespace lampe
