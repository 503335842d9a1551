#include <doctest.h>

#include <cmath>
#include <random>

#include "lampe/three_pass.hpp"
#include "test_helpers.hpp"

using namespace lampe;
using lampe::testing::max_abs_diff;
using lampe::testing::plain_rope_attention;
using lampe::testing::random_config;

namespace {

const MappingConfig kDemo{10, 7, 3, 3, 7};

// Full softmax of one row computed directly, for merge recombination checks.
struct RowSoftmax {
    std::vector<double> output;
    double lse;
};

RowSoftmax direct_softmax(const std::vector<double>& logits,
                          const std::vector<std::vector<double>>& values,
                          const std::vector<bool>& mask) {
    double max_logit = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < logits.size(); ++j) {
        if (mask[j]) max_logit = std::max(max_logit, logits[j]);
    }
    RowSoftmax row;
    row.output.assign(values[0].size(), 0.0);
    if (max_logit == -std::numeric_limits<double>::infinity()) {
        row.lse = max_logit;
        return row;
    }
    double denom = 0.0;
    for (std::size_t j = 0; j < logits.size(); ++j) {
        if (mask[j]) denom += std::exp(logits[j] - max_logit);
    }
    for (std::size_t j = 0; j < logits.size(); ++j) {
        if (!mask[j]) continue;
        const double w = std::exp(logits[j] - max_logit) / denom;
        for (std::size_t d = 0; d < row.output.size(); ++d) row.output[d] += w * values[j][d];
    }
    row.lse = max_logit + std::log(denom);
    return row;
}

PartialAttention partial_from_row(const RowSoftmax& row) {
    PartialAttention p = make_empty_partial(1, static_cast<int>(row.output.size()), 0, 1);
    for (std::size_t d = 0; d < row.output.size(); ++d) p.output[d] = row.output[d];
    p.lse[0] = row.lse;
    return p;
}

}  // namespace

TEST_CASE("pass plan positions follow the region formulas") {
    const PassPlan plan = PassPlan::from_config(kDemo);
    CHECK(plan.mid_q_pos[9] == 4);
    CHECK(plan.mid_k_pos[4] == 1);
    CHECK(plan.mid_k_pos[0] == 0);
    CHECK(plan.tail_q_pos[7] == 4);  // m - s2 at the first tail row
    CHECK(plan.tail_q_pos[9] == 6);
    CHECK(plan.head_q_pos[5] == 5);
    for (std::int64_t i = 0; i < 10; ++i) {
        CHECK(plan.mid_q_pos[static_cast<std::size_t>(i)] ==
              query_position(i, Region::middle, kDemo));
        CHECK(plan.mid_k_pos[static_cast<std::size_t>(i)] ==
              key_position(i, Region::middle, kDemo));
    }
}

TEST_CASE("pass filters realize the region partition exhaustively") {
    std::mt19937_64 rng(53);
    for (std::int64_t l = 1; l <= 40; ++l) {
        for (int trial = 0; trial < 4; ++trial) {
            const MappingConfig cfg = random_config(rng, l);
            const PassPlan plan = PassPlan::from_config(cfg);
            const RegionPartition part = plan.partition;
            const auto head = plan.head_filter();
            const auto middle = plan.middle_filter();
            const auto tail = plan.tail_filter();
            std::int64_t counts[3] = {0, 0, 0};
            for (std::int64_t i = 0; i < l; ++i) {
                for (std::int64_t j = 0; j <= i; ++j) {
                    const int hits = (head(i, j) ? 1 : 0) + (middle(i, j) ? 1 : 0) +
                                     (tail(i, j) ? 1 : 0);
                    CAPTURE(cfg.str());
                    REQUIRE(hits == 1);  // disjoint and exhaustive
                    if (head(i, j)) {
                        REQUIRE(part.classify_offset(i - j) == Region::head);
                        ++counts[0];
                    } else if (middle(i, j)) {
                        REQUIRE(part.classify_offset(i - j) == Region::middle);
                        ++counts[1];
                    } else {
                        REQUIRE(part.classify_offset(i - j) == Region::tail);
                        ++counts[2];
                    }
                }
            }
            REQUIRE(counts[0] == part.head_pairs);
            REQUIRE(counts[1] == part.middle_pairs);
            REQUIRE(counts[2] == part.tail_pairs);
        }
    }
}

TEST_CASE("head pass") {
    const RotaryBasis basis = RotaryBasis::create(16);
    SUBCASE("s1 >= l-1 makes the head pass the whole attention") {
        const AttentionBatch batch = make_random_batch(61, 2, 12, 16);
        const MappingConfig cfg{12, 12, 11, 0, 0};
        const PassPlan plan = PassPlan::from_config(cfg);
        const PartialAttention head = run_head_pass(batch, plan, basis);
        const auto plain = plain_rope_attention(batch, basis);
        CHECK(max_abs_diff(head.output, plain.output) < 1e-10);
        CHECK(head.visited_pairs == 12 * 13 / 2);
    }
    SUBCASE("s1 = 0 attends only to self") {
        const AttentionBatch batch = make_random_batch(67, 1, 9, 16);
        const MappingConfig cfg{9, 4, 0, 0, 0};
        const PartialAttention head = run_head_pass(batch, PassPlan::from_config(cfg), basis);
        for (std::int64_t i = 0; i < 9; ++i) {
            const auto out = head.output_row(0, i);
            const auto v = batch.v_row(0, i);
            for (int d = 0; d < 16; ++d) {
                CHECK(out[static_cast<std::size_t>(d)] ==
                      doctest::Approx(v[static_cast<std::size_t>(d)]).epsilon(1e-12));
            }
        }
        CHECK(head.visited_pairs == 9);
    }
}

TEST_CASE("middle pass per-pair logits match the pairwise relative form") {
    const AttentionBatch batch = make_random_batch(71, 1, 10, 16);
    const RotaryBasis basis = RotaryBasis::create(16);
    const PassPlan plan = PassPlan::from_config(kDemo);
    // Single-pair filters isolate one logit at a time: lse == that logit.
    for (std::int64_t i = 0; i < 10; ++i) {
        for (std::int64_t j = 0; j <= i; ++j) {
            if (!(i - j > kDemo.s1 && i - j < kDemo.l - kDemo.s2)) continue;
            const PartialAttention one = windowed_partial_attention(
                batch, plan.mid_q_pos, plan.mid_k_pos,
                [i, j](std::int64_t a, std::int64_t b) { return a == i && b == j; }, basis);
            const std::int64_t rel =
                plan.mid_q_pos[static_cast<std::size_t>(i)] - plan.mid_k_pos[static_cast<std::size_t>(j)];
            const double expected =
                relative_logit(batch.q_row(0, i), batch.k_row(0, j), -rel, basis, batch.scale);
            CHECK(one.lse_at(0, i) == doctest::Approx(expected).epsilon(1e-12));
        }
    }
}

TEST_CASE("middle pass coverage and empty-row behavior") {
    const AttentionBatch batch = make_random_batch(73, 2, 10, 8);
    const RotaryBasis basis = RotaryBasis::create(8);
    const PassPlan plan = PassPlan::from_config(kDemo);
    const PartialAttention mid = run_middle_pass(batch, plan, basis);
    CHECK(mid.row_begin == 3);
    CHECK(mid.row_end == 10);
    CHECK(mid.visited_pairs == plan.partition.middle_pairs);
    // Row s1 has no middle keys: i - j > s1 forces j < 0.
    CHECK(mid.lse_at(0, 3) == -std::numeric_limits<double>::infinity());
}

TEST_CASE("tail pass") {
    const RotaryBasis basis = RotaryBasis::create(8);
    const AttentionBatch batch = make_random_batch(79, 1, 10, 8);
    const PassPlan plan = PassPlan::from_config(kDemo);
    const PartialAttention tail = run_tail_pass(batch, plan, basis);

    SUBCASE("visited pairs are exactly the i-j >= l-s2 set") {
        CHECK(tail.row_begin == 7);
        CHECK(tail.row_end == 10);
        CHECK(tail.visited_pairs == 6);  // (7,0) (8,0) (8,1) (9,0) (9,1) (9,2)
        CHECK(plan.partition.tail_pairs == 6);
    }

    SUBCASE("logits match the dense oracle on the same pairs") {
        const RelPositionMatrix pe = build_index_pe_matrix(kDemo);
        for (const auto& [i, j] : std::vector<std::pair<std::int64_t, std::int64_t>>{
                 {7, 0}, {8, 0}, {8, 1}, {9, 0}, {9, 1}, {9, 2}}) {
            const PartialAttention one = windowed_partial_attention(
                batch, plan.tail_q_pos, plan.tail_k_pos,
                [i = i, j = j](std::int64_t a, std::int64_t b) { return a == i && b == j; },
                basis, 7, 10);
            const double expected = relative_logit(batch.q_row(0, i), batch.k_row(0, j),
                                                   -pe.at(i, j), basis, batch.scale);
            CHECK(one.lse_at(0, i) == doctest::Approx(expected).epsilon(1e-12));
        }
    }

    SUBCASE("s2 = 0 yields an empty partial") {
        const MappingConfig cfg{10, 7, 3, 0, 0};
        const PartialAttention none = run_tail_pass(batch, PassPlan::from_config(cfg), basis);
        CHECK(none.rows() == 0);
        CHECK(none.visited_pairs == 0);
    }
}

TEST_CASE("merge_two") {
    std::mt19937_64 rng(83);
    auto random_values = [&](std::size_t n, int dim) {
        std::vector<std::vector<double>> vals(n, std::vector<double>(static_cast<std::size_t>(dim)));
        for (auto& row : vals) {
            for (double& x : row) x = static_cast<double>(rng() >> 11) * 0x1.0p-53 * 4.0 - 2.0;
        }
        return vals;
    };

    SUBCASE("empty partial is the identity") {
        const auto values = random_values(6, 4);
        std::vector<double> logits(6);
        for (double& x : logits) x = static_cast<double>(rng() >> 11) * 0x1.0p-53 * 6.0 - 3.0;
        const auto full = direct_softmax(logits, values, std::vector<bool>(6, true));
        const PartialAttention a = partial_from_row(full);
        const PartialAttention empty = make_empty_partial(1, 4, 0, 1);
        const PartialAttention merged = merge_two(a, empty);
        CHECK(merged.lse[0] == a.lse[0]);
        for (std::size_t d = 0; d < 4; ++d) CHECK(merged.output[d] == a.output[d]);
        const PartialAttention both = merge_two(empty, make_empty_partial(1, 4, 0, 1));
        CHECK(both.lse[0] == -std::numeric_limits<double>::infinity());
    }

    SUBCASE("equal lse averages the outputs") {
        PartialAttention a = make_empty_partial(1, 2, 0, 1);
        PartialAttention b = make_empty_partial(1, 2, 0, 1);
        a.lse[0] = b.lse[0] = 1.25;
        a.output = {2.0, 4.0};
        b.output = {6.0, 0.0};
        const PartialAttention merged = merge_two(a, b);
        CHECK(merged.output[0] == doctest::Approx(4.0).epsilon(1e-15));
        CHECK(merged.output[1] == doctest::Approx(2.0).epsilon(1e-15));
    }

    SUBCASE("recombining an arbitrary split reproduces the full softmax") {
        for (int trial = 0; trial < 30; ++trial) {
            const std::size_t n = 2 + rng() % 12;
            const auto values = random_values(n, 6);
            std::vector<double> logits(n);
            for (double& x : logits) x = static_cast<double>(rng() >> 11) * 0x1.0p-53 * 40.0 - 20.0;
            std::vector<bool> in_a(n);
            for (std::size_t j = 0; j < n; ++j) in_a[j] = (rng() & 1) != 0;
            std::vector<bool> in_b(n);
            for (std::size_t j = 0; j < n; ++j) in_b[j] = !in_a[j];

            const auto full = direct_softmax(logits, values, std::vector<bool>(n, true));
            const PartialAttention merged = merge_two(
                partial_from_row(direct_softmax(logits, values, in_a)),
                partial_from_row(direct_softmax(logits, values, in_b)));
            CHECK(std::abs(merged.lse[0] - full.lse) < 1e-12);
            for (std::size_t d = 0; d < 6; ++d) {
                REQUIRE(merged.output[d] == doctest::Approx(full.output[d]).epsilon(1e-12));
            }
        }
    }

    SUBCASE("row-set mismatch throws") {
        const PartialAttention a = make_empty_partial(1, 4, 0, 2);
        const PartialAttention b = make_empty_partial(1, 4, 0, 1);
        CHECK_THROWS_AS(merge_two(a, b), precondition_error);
    }
}

TEST_CASE("merge_three") {
    std::mt19937_64 rng(89);
    auto random_partial = [&](double lse_shift) {
        PartialAttention p = make_empty_partial(1, 3, 0, 1);
        p.lse[0] = static_cast<double>(rng() >> 11) * 0x1.0p-53 * 10.0 - 5.0 + lse_shift;
        for (double& x : p.output) x = static_cast<double>(rng() >> 11) * 0x1.0p-53 * 2.0 - 1.0;
        return p;
    };

    SUBCASE("one empty limb reduces to merge_two") {
        for (int trial = 0; trial < 20; ++trial) {
            const PartialAttention a = random_partial(0.0);
            const PartialAttention b = random_partial(1.0);
            const PartialAttention empty = make_empty_partial(1, 3, 0, 1);
            const PartialAttention three = merge_three(a, b, empty);
            const PartialAttention two = merge_two(a, b);
            CHECK(three.lse[0] == doctest::Approx(two.lse[0]).epsilon(1e-15));
            for (std::size_t d = 0; d < 3; ++d) {
                CHECK(three.output[d] == doctest::Approx(two.output[d]).epsilon(1e-14));
            }
        }
    }

    SUBCASE("all-equal lse gives the equal-weight average") {
        PartialAttention a = make_empty_partial(1, 1, 0, 1);
        PartialAttention b = a, c = a;
        a.lse[0] = b.lse[0] = c.lse[0] = -2.0;
        a.output = {3.0};
        b.output = {6.0};
        c.output = {9.0};
        const PartialAttention merged = merge_three(a, b, c);
        CHECK(merged.output[0] == doctest::Approx(6.0).epsilon(1e-14));
    }

    SUBCASE("associativity against merge_two composition") {
        for (int trial = 0; trial < 50; ++trial) {
            const PartialAttention a = random_partial(0.0);
            const PartialAttention b = random_partial(2.0);
            const PartialAttention c = random_partial(-2.0);
            const PartialAttention direct = merge_three(a, b, c);
            const PartialAttention nested = merge_two(merge_two(a, b), c);
            CHECK(std::abs(direct.lse[0] - nested.lse[0]) < 1e-12);
            for (std::size_t d = 0; d < 3; ++d) {
                REQUIRE(direct.output[d] == doctest::Approx(nested.output[d]).epsilon(1e-12));
            }
        }
    }

    SUBCASE("gate form equals normalized weights") {
        // Basis-vector outputs turn the merged row into the raw gate vector.
        for (int trial = 0; trial < 100; ++trial) {
            PartialAttention a = make_empty_partial(1, 3, 0, 1);
            PartialAttention b = a, c = a;
            const double la = static_cast<double>(rng() >> 11) * 0x1.0p-53 * 60.0 - 30.0;
            const double lb = static_cast<double>(rng() >> 11) * 0x1.0p-53 * 60.0 - 30.0;
            const double lc = static_cast<double>(rng() >> 11) * 0x1.0p-53 * 60.0 - 30.0;
            a.lse[0] = la;
            b.lse[0] = lb;
            c.lse[0] = lc;
            a.output = {1.0, 0.0, 0.0};
            b.output = {0.0, 1.0, 0.0};
            c.output = {0.0, 0.0, 1.0};
            const PartialAttention merged = merge_three(a, b, c);
            const double mx = std::max({la, lb, lc});
            const double za = std::exp(la - mx), zb = std::exp(lb - mx), zc = std::exp(lc - mx);
            const double z = za + zb + zc;
            CHECK(merged.output[0] == doctest::Approx(za / z).epsilon(1e-12));
            CHECK(merged.output[1] == doctest::Approx(zb / z).epsilon(1e-12));
            CHECK(merged.output[2] == doctest::Approx(zc / z).epsilon(1e-12));
            CHECK(merged.output[0] + merged.output[1] + merged.output[2] ==
                  doctest::Approx(1.0).epsilon(1e-12));
        }
    }
}

TEST_CASE("lampe_attention equals the dense oracle") {
    const RotaryBasis basis = RotaryBasis::create(16);

    SUBCASE("identity config reproduces plain RoPE attention") {
        const AttentionBatch batch = make_random_batch(97, 2, 24, 16);
        const MappingConfig cfg{24, 24, 4, 4, 0};
        const MergedAttention merged = lampe_attention(batch, cfg, basis);
        const auto plain = plain_rope_attention(batch, basis);
        CHECK(max_abs_diff(merged.output, plain.output) < 1e-10);
    }

    SUBCASE("central oracle comparison, spec config") {
        const AttentionBatch batch = make_random_batch(101, 2, 128, 16);
        const MappingConfig cfg{128, 48, 8, 8, 0};
        const MergedAttention merged = lampe_attention(batch, cfg, basis);
        const DenseAttentionResult oracle =
            dense_oracle_attention(batch, build_index_pe_matrix(cfg), basis);
        CHECK(max_abs_diff(merged.output, oracle.output) < 1e-8);
    }

    SUBCASE("ten-token demo config matches the oracle") {
        const AttentionBatch batch = make_random_batch(103, 1, 10, 16);
        const MergedAttention merged = lampe_attention(batch, kDemo, basis);
        const DenseAttentionResult oracle =
            dense_oracle_attention(batch, build_index_pe_matrix(kDemo), basis);
        CHECK(max_abs_diff(merged.output, oracle.output) < 1e-10);
    }

    SUBCASE("row provenance follows the merge plan") {
        const AttentionBatch batch = make_random_batch(107, 1, 10, 16);
        const MergedAttention merged = lampe_attention(batch, kDemo, basis);
        for (std::int64_t i = 0; i < 3; ++i) CHECK(merged.provenance[static_cast<std::size_t>(i)] == kPassHead);
        for (std::int64_t i = 3; i < 7; ++i) {
            CHECK(merged.provenance[static_cast<std::size_t>(i)] == (kPassHead | kPassMiddle));
        }
        for (std::int64_t i = 7; i < 10; ++i) {
            CHECK(merged.provenance[static_cast<std::size_t>(i)] ==
                  (kPassHead | kPassMiddle | kPassTail));
        }
    }

    SUBCASE("weight conservation with an all-ones probe V") {
        AttentionBatch batch = make_random_batch(109, 2, 32, 16);
        std::fill(batch.v.begin(), batch.v.end(), 1.0);
        const MappingConfig cfg{32, 12, 3, 3, 0};
        const MergedAttention merged = lampe_attention(batch, cfg, basis);
        for (const double x : merged.output) CHECK(x == doctest::Approx(1.0).epsilon(1e-12));
    }

    SUBCASE("seq_len mismatch throws") {
        const AttentionBatch batch = make_random_batch(113, 1, 16, 16);
        CHECK_THROWS_AS(lampe_attention(batch, kDemo, basis), precondition_error);
    }
}

TEST_CASE("randomized oracle equivalence across configs") {
    std::mt19937_64 rng(127);
    const RotaryBasis basis = RotaryBasis::create(8);
    for (int trial = 0; trial < 15; ++trial) {
        const std::int64_t l = 8 + static_cast<std::int64_t>(rng() % 56);
        const MappingConfig cfg = random_config(rng, l);
        const AttentionBatch batch = make_random_batch(rng(), 1 + static_cast<int>(rng() % 2), l, 8);
        const MergedAttention merged = lampe_attention(batch, cfg, basis);
        const DenseAttentionResult oracle =
            dense_oracle_attention(batch, build_index_pe_matrix(cfg), basis);
        CAPTURE(cfg.str());
        REQUIRE(max_abs_diff(merged.output, oracle.output) < 1e-8);
    }
}

TEST_CASE("equivalence report") {
    const AttentionBatch batch = make_random_batch(131, 2, 48, 16);
    const MappingConfig cfg{48, 20, 4, 4, 0};
    const EquivalenceReport report =
        run_equivalence_check(batch, cfg, RotaryBasis::create(16));
    CHECK(report.max_abs_error < 1e-8);
    CHECK(report.disjointness_ok);
    CHECK(report.monotonicity_ok);
    CHECK(report.head_pairs + report.middle_pairs + report.tail_pairs == 48 * 49 / 2);
    const std::string with_timings = report_to_json(report, true);
    const std::string stable = report_to_json(report, false);
    CHECK(with_timings.find("runtime_ms_per_pass") != std::string::npos);
    CHECK(stable.find("runtime_ms_per_pass") == std::string::npos);
    CHECK(stable.find("max_abs_error_vs_oracle") != std::string::npos);
}
