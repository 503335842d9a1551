#include "lampe/three_pass.hpp"

#include <chrono>
#include <cmath>
#include <cstring>
#include <limits>

#include <json.hpp>

namespace lampe {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double lse2(double a, double b) {
    if (a == kNegInf) return b;
    if (b == kNegInf) return a;
    const double hi = std::max(a, b);
    const double lo = std::min(a, b);
    return hi + std::log1p(std::exp(lo - hi));
}

void check_mergeable(const PartialAttention& a, const PartialAttention& b, const char* what) {
    if (a.heads != b.heads || a.head_dim != b.head_dim || a.row_begin != b.row_begin ||
        a.row_end != b.row_end) {
        throw precondition_error(std::string(what) + ": partials cover different rows or shapes");
    }
}

double ms_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
        .count();
}

}  // namespace

PairFilter PassPlan::head_filter() const {
    const std::int64_t s1 = cfg.s1;
    return [s1](std::int64_t i, std::int64_t j) { return i - j <= s1; };
}

PairFilter PassPlan::middle_filter() const {
    const std::int64_t s1 = cfg.s1;
    const std::int64_t cut = cfg.l - cfg.s2;
    return [s1, cut](std::int64_t i, std::int64_t j) { return i - j > s1 && i - j < cut; };
}

PairFilter PassPlan::tail_filter() const {
    const std::int64_t cut = cfg.l - cfg.s2;
    return [cut](std::int64_t i, std::int64_t j) { return i - j >= cut; };
}

PassPlan PassPlan::from_config(const MappingConfig& cfg) {
    cfg.validate();
    PassPlan plan;
    plan.cfg = cfg;
    plan.partition = region_partition(cfg);

    const std::int64_t l = cfg.l;
    const MiddleTransform t = MiddleTransform::from_config(cfg);
    plan.head_q_pos.resize(static_cast<std::size_t>(l));
    plan.head_k_pos.resize(static_cast<std::size_t>(l));
    plan.mid_q_pos.resize(static_cast<std::size_t>(l));
    plan.mid_k_pos.resize(static_cast<std::size_t>(l));
    plan.tail_q_pos.assign(static_cast<std::size_t>(l), 0);
    plan.tail_k_pos.resize(static_cast<std::size_t>(l));
    for (std::int64_t i = 0; i < l; ++i) {
        const auto idx = static_cast<std::size_t>(i);
        plan.head_q_pos[idx] = i;
        plan.head_k_pos[idx] = i;
        plan.mid_q_pos[idx] = t.floor_apply(i);
        plan.mid_k_pos[idx] = t.floor_slope(i);
        plan.tail_k_pos[idx] = i;
        // Tail query positions are negative (undefined) before l - s2.
        if (i >= l - cfg.s2) plan.tail_q_pos[idx] = cfg.m - l + i;
    }
    return plan;
}

PartialAttention run_head_pass(const AttentionBatch& batch, const PassPlan& plan,
                               const RotaryBasis& basis) {
    return windowed_partial_attention(batch, plan.head_q_pos, plan.head_k_pos,
                                      plan.head_filter(), basis);
}

PartialAttention run_middle_pass(const AttentionBatch& batch, const PassPlan& plan,
                                 const RotaryBasis& basis) {
    return windowed_partial_attention(batch, plan.mid_q_pos, plan.mid_k_pos,
                                      plan.middle_filter(), basis, plan.mid_rows_begin(),
                                      batch.seq_len);
}

PartialAttention run_tail_pass(const AttentionBatch& batch, const PassPlan& plan,
                               const RotaryBasis& basis) {
    return windowed_partial_attention(batch, plan.tail_q_pos, plan.tail_k_pos,
                                      plan.tail_filter(), basis, plan.tail_rows_begin(),
                                      batch.seq_len);
}

PartialAttention merge_two(const PartialAttention& a, const PartialAttention& b) {
    check_mergeable(a, b, "merge_two");
    PartialAttention out = make_empty_partial(a.heads, a.head_dim, a.row_begin, a.row_end);
    out.visited_pairs = a.visited_pairs + b.visited_pairs;
    const int D = a.head_dim;
    for (int h = 0; h < a.heads; ++h) {
        for (std::int64_t i = a.row_begin; i < a.row_end; ++i) {
            const double la = a.lse_at(h, i);
            const double lb = b.lse_at(h, i);
            auto dst = out.output_row(h, i);
            if (la == kNegInf && lb == kNegInf) continue;
            if (lb == kNegInf) {
                const auto src = a.output_row(h, i);
                std::memcpy(dst.data(), src.data(), src.size() * sizeof(double));
                out.lse_at(h, i) = la;
                continue;
            }
            if (la == kNegInf) {
                const auto src = b.output_row(h, i);
                std::memcpy(dst.data(), src.data(), src.size() * sizeof(double));
                out.lse_at(h, i) = lb;
                continue;
            }
            const double wa = sigmoid(la - lb);
            const double wb = sigmoid(lb - la);
            const auto ra = a.output_row(h, i);
            const auto rb = b.output_row(h, i);
            for (int d = 0; d < D; ++d) {
                dst[static_cast<std::size_t>(d)] =
                    ra[static_cast<std::size_t>(d)] * wa + rb[static_cast<std::size_t>(d)] * wb;
            }
            out.lse_at(h, i) = lse2(la, lb);
        }
    }
    return out;
}

PartialAttention merge_three(const PartialAttention& a, const PartialAttention& b,
                             const PartialAttention& c) {
    check_mergeable(a, b, "merge_three");
    check_mergeable(a, c, "merge_three");
    PartialAttention out = make_empty_partial(a.heads, a.head_dim, a.row_begin, a.row_end);
    out.visited_pairs = a.visited_pairs + b.visited_pairs + c.visited_pairs;
    const int D = a.head_dim;
    const PartialAttention* parts[3] = {&a, &b, &c};
    for (int h = 0; h < a.heads; ++h) {
        for (std::int64_t i = a.row_begin; i < a.row_end; ++i) {
            const double lse_v[3] = {a.lse_at(h, i), b.lse_at(h, i), c.lse_at(h, i)};
            int finite[3];
            int n_finite = 0;
            for (int r = 0; r < 3; ++r) {
                if (lse_v[r] != kNegInf) finite[n_finite++] = r;
            }
            auto dst = out.output_row(h, i);
            if (n_finite == 0) continue;
            if (n_finite == 1) {
                const auto src = parts[finite[0]]->output_row(h, i);
                std::memcpy(dst.data(), src.data(), src.size() * sizeof(double));
                out.lse_at(h, i) = lse_v[finite[0]];
                continue;
            }
            if (n_finite == 2) {
                const double l0 = lse_v[finite[0]];
                const double l1 = lse_v[finite[1]];
                const double w0 = sigmoid(l0 - l1);
                const double w1 = sigmoid(l1 - l0);
                const auto r0 = parts[finite[0]]->output_row(h, i);
                const auto r1 = parts[finite[1]]->output_row(h, i);
                for (int d = 0; d < D; ++d) {
                    dst[static_cast<std::size_t>(d)] = r0[static_cast<std::size_t>(d)] * w0 +
                                                       r1[static_cast<std::size_t>(d)] * w1;
                }
                out.lse_at(h, i) = lse2(l0, l1);
                continue;
            }
            // All limbs live: per-limb gates, each 1/(1 + sum of exp-diffs).
            double gates[3];
            for (int r = 0; r < 3; ++r) {
                const int s = (r + 1) % 3;
                const int t = (r + 2) % 3;
                gates[r] = 1.0 / (1.0 + std::exp(lse_v[s] - lse_v[r]) +
                                  std::exp(lse_v[t] - lse_v[r]));
            }
            for (int d = 0; d < D; ++d) {
                double acc = 0.0;
                for (int r = 0; r < 3; ++r) {
                    acc += parts[r]->output_row(h, i)[static_cast<std::size_t>(d)] * gates[r];
                }
                dst[static_cast<std::size_t>(d)] = acc;
            }
            out.lse_at(h, i) = lse2(lse2(lse_v[0], lse_v[1]), lse_v[2]);
        }
    }
    return out;
}

MergedAttention lampe_attention(const AttentionBatch& batch, const MappingConfig& cfg,
                                const RotaryBasis& basis) {
    batch.validate();
    if (cfg.l != batch.seq_len) {
        throw precondition_error("lampe_attention: cfg.l != batch.seq_len");
    }
    const PassPlan plan = PassPlan::from_config(cfg);

    const PartialAttention head = run_head_pass(batch, plan, basis);
    const PartialAttention mid = run_middle_pass(batch, plan, basis);
    const PartialAttention tail = run_tail_pass(batch, plan, basis);

    const std::int64_t l = cfg.l;
    const std::int64_t mid_from = plan.mid_rows_begin();
    const std::int64_t tail_from = plan.tail_rows_begin();

    MergedAttention merged;
    merged.heads = batch.heads;
    merged.seq_len = l;
    merged.head_dim = batch.head_dim;
    merged.output.assign(batch.q.size(), 0.0);
    merged.provenance.assign(static_cast<std::size_t>(l), 0u);

    auto commit = [&](const PartialAttention& part, unsigned mask) {
        for (int h = 0; h < merged.heads; ++h) {
            for (std::int64_t i = part.row_begin; i < part.row_end; ++i) {
                const auto src = part.output_row(h, i);
                const std::size_t off =
                    (static_cast<std::size_t>(h) * static_cast<std::size_t>(l) +
                     static_cast<std::size_t>(i)) * static_cast<std::size_t>(merged.head_dim);
                std::memcpy(merged.output.data() + off, src.data(),
                            src.size() * sizeof(double));
            }
        }
        for (std::int64_t i = part.row_begin; i < part.row_end; ++i) {
            merged.provenance[static_cast<std::size_t>(i)] = mask;
        }
    };

    if (mid_from > 0) commit(head.slice(0, mid_from), kPassHead);
    if (tail_from > mid_from) {
        commit(merge_two(head.slice(mid_from, tail_from), mid.slice(mid_from, tail_from)),
               kPassHead | kPassMiddle);
    }
    if (l > tail_from) {
        commit(merge_three(head.slice(tail_from, l), mid.slice(tail_from, l), tail),
               kPassHead | kPassMiddle | kPassTail);
    }
    return merged;
}

EquivalenceReport run_equivalence_check(const AttentionBatch& batch, const MappingConfig& cfg,
                                        const RotaryBasis& basis) {
    EquivalenceReport report;
    report.cfg = cfg;
    const PassPlan plan = PassPlan::from_config(cfg);

    auto t0 = std::chrono::steady_clock::now();
    const PartialAttention head = run_head_pass(batch, plan, basis);
    report.head_ms = ms_since(t0);

    t0 = std::chrono::steady_clock::now();
    const PartialAttention mid = run_middle_pass(batch, plan, basis);
    report.middle_ms = ms_since(t0);

    t0 = std::chrono::steady_clock::now();
    const PartialAttention tail = run_tail_pass(batch, plan, basis);
    report.tail_ms = ms_since(t0);

    report.head_pairs = head.visited_pairs;
    report.middle_pairs = mid.visited_pairs;
    report.tail_pairs = tail.visited_pairs;
    report.disjointness_ok = head.visited_pairs == plan.partition.head_pairs &&
                             mid.visited_pairs == plan.partition.middle_pairs &&
                             tail.visited_pairs == plan.partition.tail_pairs &&
                             plan.partition.total_pairs() == cfg.l * (cfg.l + 1) / 2;

    t0 = std::chrono::steady_clock::now();
    const MergedAttention merged = lampe_attention(batch, cfg, basis);
    report.merge_ms = ms_since(t0) - report.head_ms - report.middle_ms - report.tail_ms;
    if (report.merge_ms < 0.0) report.merge_ms = 0.0;

    t0 = std::chrono::steady_clock::now();
    const RelPositionMatrix pe = build_index_pe_matrix(cfg);
    const DenseAttentionResult dense = dense_oracle_attention(batch, pe, basis);
    report.oracle_ms = ms_since(t0);

    report.monotonicity_ok = verify_monotonicity(pe).pass;

    double max_err = 0.0;
    for (std::size_t idx = 0; idx < dense.output.size(); ++idx) {
        max_err = std::max(max_err, std::abs(dense.output[idx] - merged.output[idx]));
    }
    report.max_abs_error = max_err;
    return report;
}

std::string report_to_json(const EquivalenceReport& report, bool include_timings) {
    nlohmann::json doc;
    doc["config"] = {{"l", report.cfg.l},
                     {"m", report.cfg.m},
                     {"s1", report.cfg.s1},
                     {"s2", report.cfg.s2},
                     {"n", report.cfg.n}};
    doc["max_abs_error_vs_oracle"] = report.max_abs_error;
    doc["pass_pair_counts"] = {{"head", report.head_pairs},
                               {"middle", report.middle_pairs},
                               {"tail", report.tail_pairs}};
    doc["disjointness_ok"] = report.disjointness_ok;
    doc["monotonicity_ok"] = report.monotonicity_ok;
    if (include_timings) {
        doc["runtime_ms_per_pass"] = {{"head", report.head_ms},
                                      {"middle", report.middle_ms},
                                      {"tail", report.tail_ms},
                                      {"merge", report.merge_ms},
                                      {"oracle", report.oracle_ms}};
    }
    return doc.dump(2) + "\n";
}

}  // namespace lampe
