#include "lampe/pe_map.hpp"

#include <algorithm>
#include <cstring>
#include <limits>
#include <mutex>

#include "lampe/parallel.hpp"

namespace lampe {

namespace {

std::int64_t floor_div_128(__int128 num, std::int64_t den) noexcept {
    __int128 q = num / den;
    __int128 r = num % den;
    if (r != 0 && ((r < 0) != (den < 0))) --q;
    return static_cast<std::int64_t>(q);
}

void check_pair(std::int64_t i, std::int64_t j, std::int64_t l) {
    if (j < 0 || j > i || i >= l) {
        throw precondition_error("causal pair out of range: i=" + std::to_string(i) +
                                 " j=" + std::to_string(j) + " l=" + std::to_string(l));
    }
}

// Incremental floor((num*x + off) / den) for x = 0, 1, 2, ... with
// 0 <= num <= den and off >= 0. Never forms the product num*x, so no
// overflow regardless of x.
struct FloorWalker {
    std::int64_t q;
    std::int64_t acc;
    std::int64_t num;
    std::int64_t den;

    FloorWalker(std::int64_t num_, std::int64_t off, std::int64_t den_) noexcept
        : q(off / den_), acc(off % den_), num(num_), den(den_) {}

    std::int64_t value() const noexcept { return q; }

    void step() noexcept {
        acc += num;
        if (acc >= den) {
            acc -= den;
            ++q;
        }
    }
};

}  // namespace

MiddleTransform MiddleTransform::from_config(const MappingConfig& cfg) {
    cfg.validate();
    MiddleTransform t;
    t.num_ = cfg.m - cfg.s1 - cfg.s2;
    t.off_ = (cfg.l - cfg.m) * cfg.s1;
    t.den_ = cfg.l - cfg.s1 - cfg.s2;
    t.slope = Rational(t.num_, t.den_);
    t.offset = Rational(t.off_, t.den_);
    return t;
}

std::int64_t MiddleTransform::floor_apply(std::int64_t x) const noexcept {
    return floor_div_128(static_cast<__int128>(num_) * x + off_, den_);
}

std::int64_t MiddleTransform::floor_slope(std::int64_t x) const noexcept {
    return floor_div_128(static_cast<__int128>(num_) * x, den_);
}

bool MiddleTransform::identities_hold(const MappingConfig& cfg) const {
    const bool at_head = slope * Rational(cfg.s1) + offset == Rational(cfg.s1);
    const bool at_tail = slope * Rational(cfg.l - cfg.s2) + offset == Rational(cfg.m - cfg.s2);
    return at_head && at_tail;
}

RelPositionMatrix::RelPositionMatrix(std::int64_t l) : l_(l) {
    if (l < 1) throw precondition_error("RelPositionMatrix: l must be >= 1");
    if (l > std::numeric_limits<std::int32_t>::max()) {
        throw precondition_error("RelPositionMatrix: l exceeds 2^31 - 1");
    }
    count_ = static_cast<std::size_t>(l) * (l + 1) / 2;
    entries_ = std::make_unique_for_overwrite<std::int32_t[]>(count_);
}

RelPositionMatrix::RelPositionMatrix(const RelPositionMatrix& other)
    : l_(other.l_), count_(other.count_) {
    if (count_ > 0) {
        entries_ = std::make_unique_for_overwrite<std::int32_t[]>(count_);
        std::memcpy(entries_.get(), other.entries_.get(), count_ * sizeof(std::int32_t));
    }
}

RelPositionMatrix& RelPositionMatrix::operator=(const RelPositionMatrix& other) {
    if (this != &other) *this = RelPositionMatrix(other);
    return *this;
}

std::int64_t RelPositionMatrix::at(std::int64_t i, std::int64_t j) const {
    check_pair(i, j, l_);
    return entries_[row_offset(i) + static_cast<std::size_t>(j)];
}

std::int64_t RelPositionMatrix::max_value() const noexcept {
    std::int32_t best = 0;
    for (std::size_t k = 0; k < count_; ++k) best = std::max(best, entries_[k]);
    return best;
}

std::int64_t RelPositionMatrix::distinct_value_count() const {
    if (count_ == 0) return 0;
    std::vector<bool> seen(static_cast<std::size_t>(max_value()) + 1, false);
    for (std::size_t k = 0; k < count_; ++k) seen[static_cast<std::size_t>(entries_[k])] = true;
    std::int64_t count = 0;
    for (const bool b : seen) count += b ? 1 : 0;
    return count;
}

std::int64_t lampe_pe(std::int64_t i, std::int64_t j, const MappingConfig& cfg) {
    cfg.validate();
    check_pair(i, j, cfg.l);
    const std::int64_t d = i - j;
    if (d <= cfg.s1) return d;
    if (d >= cfg.l - cfg.s2) return cfg.m - cfg.l + d;
    const auto t = MiddleTransform::from_config(cfg);
    return t.floor_slope(d - cfg.s1) + cfg.s1;
}

std::int64_t adaptive_group_pe(std::int64_t i, std::int64_t j, std::int64_t l, std::int64_t m) {
    if (m < 1 || m > l) {
        throw precondition_error("adaptive_group_pe: need 1 <= m <= l, got m=" + std::to_string(m) +
                                 " l=" + std::to_string(l));
    }
    check_pair(i, j, l);
    return floor_div_128(static_cast<__int128>(m) * (i - j), l);
}

Region region_of(std::int64_t i, std::int64_t j, const MappingConfig& cfg) {
    cfg.validate();
    check_pair(i, j, cfg.l);
    const std::int64_t d = i - j;
    if (d <= cfg.s1) return Region::head;
    if (d >= cfg.l - cfg.s2) return Region::tail;
    return Region::middle;
}

std::int64_t query_position(std::int64_t i, Region region, const MappingConfig& cfg) {
    cfg.validate();
    if (i < 0 || i >= cfg.l) {
        throw precondition_error("query_position: i out of range: " + std::to_string(i));
    }
    switch (region) {
        case Region::head:
            return i;
        case Region::middle:
            return MiddleTransform::from_config(cfg).floor_apply(i);
        case Region::tail:
            if (i < cfg.l - cfg.s2) {
                throw domain_error("tail query position undefined for i < l - s2 (i=" +
                                   std::to_string(i) + ", l-s2=" + std::to_string(cfg.l - cfg.s2) + ")");
            }
            return cfg.m - cfg.l + i;
    }
    throw precondition_error("query_position: bad region");
}

std::int64_t key_position(std::int64_t j, Region region, const MappingConfig& cfg) {
    cfg.validate();
    if (j < 0 || j >= cfg.l) {
        throw precondition_error("key_position: j out of range: " + std::to_string(j));
    }
    switch (region) {
        case Region::head:
        case Region::tail:
            return j;
        case Region::middle:
            return MiddleTransform::from_config(cfg).floor_slope(j);
    }
    throw precondition_error("key_position: bad region");
}

RelPositionMatrix build_pe_matrix(const MappingConfig& cfg) {
    cfg.validate();
    const std::int64_t l = cfg.l;
    RelPositionMatrix pe(l);

    // The offset-only mapping is Toeplitz: entry (i, j) depends only on
    // d = i - j. Precompute the per-offset values reversed so each row is a
    // contiguous slice, then rows are straight memcpys.
    std::vector<std::int32_t> rev(static_cast<std::size_t>(l));
    {
        const std::int64_t num = cfg.m - cfg.s1 - cfg.s2;
        const std::int64_t den = cfg.l - cfg.s1 - cfg.s2;
        const std::int64_t tail_from = cfg.l - cfg.s2;
        FloorWalker mid(num, 0, den);  // floor(num * (d - s1) / den) as d walks
        for (std::int64_t d = 0; d < l; ++d) {
            std::int64_t v;
            if (d <= cfg.s1) {
                v = d;
            } else if (d >= tail_from) {
                v = cfg.m - cfg.l + d;
            } else {
                mid.step();
                v = mid.value() + cfg.s1;
            }
            rev[static_cast<std::size_t>(l - 1 - d)] = static_cast<std::int32_t>(v);
        }
    }

    parallel_for(l, [&](std::int64_t begin, std::int64_t end) {
        for (std::int64_t i = begin; i < end; ++i) {
            std::memcpy(pe.row(i), rev.data() + (l - 1 - i),
                        static_cast<std::size_t>(i + 1) * sizeof(std::int32_t));
        }
    }, /*serial_below=*/8192);
    return pe;
}

RelPositionMatrix build_index_pe_matrix(const MappingConfig& cfg) {
    cfg.validate();
    const std::int64_t l = cfg.l;
    RelPositionMatrix pe(l);

    const std::int64_t num = cfg.m - cfg.s1 - cfg.s2;
    const std::int64_t off = (cfg.l - cfg.m) * cfg.s1;
    const std::int64_t den = cfg.l - cfg.s1 - cfg.s2;

    // Middle-region key positions floor(num * j / den), shared by all rows.
    std::vector<std::int32_t> kmid(static_cast<std::size_t>(l));
    {
        FloorWalker walk(num, 0, den);
        for (std::int64_t j = 0; j < l; ++j) {
            kmid[static_cast<std::size_t>(j)] = static_cast<std::int32_t>(walk.value());
            walk.step();
        }
    }

    const std::int64_t tail_from = cfg.l - cfg.s2;
    const MiddleTransform t = MiddleTransform::from_config(cfg);
    parallel_for(l, [&](std::int64_t begin, std::int64_t end) {
        for (std::int64_t i = begin; i < end; ++i) {
            std::int32_t* out = pe.row(i);
            const std::int64_t tail_end = i - tail_from;          // last tail column
            const std::int64_t head_begin = std::max<std::int64_t>(0, i - cfg.s1);
            // All values fit int32 (bounded by m - 1); keeping the segment
            // loops in int32 lets them vectorize.
            std::int64_t j = 0;
            std::int32_t v = static_cast<std::int32_t>(cfg.m - cfg.l + i);
            for (; j <= tail_end; ++j) out[j] = v--;
            const std::int32_t q_mid = static_cast<std::int32_t>(t.floor_apply(i));
            const std::int32_t* km = kmid.data();
            for (; j < head_begin; ++j) out[j] = q_mid - km[j];
            v = static_cast<std::int32_t>(i - j);
            for (; j <= i; ++j) out[j] = v--;
        }
    }, /*serial_below=*/8192);
    return pe;
}

std::int64_t self_extend_pe(std::int64_t i, std::int64_t j, const SelfExtendConfig& cfg) {
    cfg.validate();
    if (j < 0 || j > i) {
        throw precondition_error("self_extend_pe: need 0 <= j <= i, got i=" + std::to_string(i) +
                                 " j=" + std::to_string(j));
    }
    const std::int64_t d = i - j;
    if (d <= cfg.w) return d;
    return cfg.w + (d - cfg.w) / cfg.G;
}

MonotonicityReport verify_monotonicity(const RelPositionMatrix& pe) {
    const std::int64_t l = pe.size();
    // Adjacent scan per row; a violation between any j1 < j2 implies one
    // between neighbors. Threads keep their best (lowest) candidate.
    std::mutex mu;
    MonotonicityReport best;
    parallel_for(l, [&](std::int64_t begin, std::int64_t end) {
        MonotonicityReport local;
        for (std::int64_t i = begin; i < end && local.pass; ++i) {
            const std::int32_t* row = pe.row(i);
            for (std::int64_t j = 0; j < i; ++j) {
                if (row[j] < row[j + 1]) {
                    local = MonotonicityReport{false, i, j, j + 1};
                    break;
                }
            }
        }
        if (!local.pass) {
            std::lock_guard<std::mutex> lock(mu);
            if (best.pass || local.i < best.i || (local.i == best.i && local.j1 < best.j1)) {
                best = local;
            }
        }
    }, /*serial_below=*/8192);
    return best;
}

RegionPartition region_partition(const MappingConfig& cfg) {
    cfg.validate();
    RegionPartition part;
    part.l = cfg.l;
    part.head_max_offset = cfg.s1;
    part.tail_min_offset = cfg.l - cfg.s2;

    // Count of causal pairs with offset d in [a, b]: sum of (l - d).
    auto band_pairs = [&](std::int64_t a, std::int64_t b) -> std::int64_t {
        a = std::max<std::int64_t>(a, 0);
        b = std::min<std::int64_t>(b, cfg.l - 1);
        if (a > b) return 0;
        const std::int64_t count = b - a + 1;
        return count * cfg.l - (a + b) * count / 2;
    };
    part.head_pairs = band_pairs(0, cfg.s1);
    part.middle_pairs = band_pairs(cfg.s1 + 1, cfg.l - cfg.s2 - 1);
    part.tail_pairs = band_pairs(cfg.l - cfg.s2, cfg.l - 1);
    return part;
}

}  // namespace lampe
