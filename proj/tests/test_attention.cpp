#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "lampe/attention.hpp"
#include "lampe/pe_map.hpp"
#include "test_helpers.hpp"

using namespace lampe;
using lampe::testing::kahan_sum;
using lampe::testing::max_abs_diff;
using lampe::testing::plain_rope_attention;

namespace {

RelPositionMatrix causal_matrix(std::int64_t l) {
    return build_pe_matrix(MappingConfig{l, l, 0, 0, 0});
}

std::vector<std::int64_t> iota_positions(std::int64_t l) {
    std::vector<std::int64_t> pos(static_cast<std::size_t>(l));
    for (std::int64_t i = 0; i < l; ++i) pos[static_cast<std::size_t>(i)] = i;
    return pos;
}

}  // namespace

TEST_CASE("batch generator is deterministic and well-formed") {
    const AttentionBatch a = make_random_batch(99, 2, 16, 8);
    const AttentionBatch b = make_random_batch(99, 2, 16, 8);
    const AttentionBatch c = make_random_batch(100, 2, 16, 8);
    CHECK(a.q == b.q);
    CHECK(a.k == b.k);
    CHECK(a.v == b.v);
    CHECK(a.q != c.q);
    CHECK(a.scale == doctest::Approx(1.0 / std::sqrt(8.0)));
    for (const double x : a.q) {
        CHECK(x >= -1.0);
        CHECK(x < 1.0);
    }
}

TEST_CASE("dense oracle: single token") {
    const AttentionBatch batch = make_random_batch(1, 2, 1, 8);
    const RotaryBasis basis = RotaryBasis::create(8);
    const DenseAttentionResult result = dense_oracle_attention(batch, causal_matrix(1), basis);
    for (int h = 0; h < 2; ++h) {
        const auto v = batch.v_row(h, 0);
        for (int d = 0; d < 8; ++d) {
            CHECK(result.output[static_cast<std::size_t>(h * 8 + d)] == v[static_cast<std::size_t>(d)]);
        }
        // softmax over one logit: lse equals that logit
        const double expected =
            relative_logit(batch.q_row(h, 0), batch.k_row(h, 0), 0, basis, batch.scale);
        CHECK(result.lse[static_cast<std::size_t>(h)] == doctest::Approx(expected).epsilon(1e-15));
    }
}

TEST_CASE("dense oracle with causal pe equals textbook RoPE attention") {
    const AttentionBatch batch = make_random_batch(7, 2, 24, 16);
    const RotaryBasis basis = RotaryBasis::create(16);
    const DenseAttentionResult oracle = dense_oracle_attention(batch, causal_matrix(24), basis);
    const auto plain = plain_rope_attention(batch, basis);
    CHECK(max_abs_diff(oracle.output, plain.output) < 1e-10);
    CHECK(max_abs_diff(oracle.lse, plain.lse) < 1e-10);
}

TEST_CASE("uniform V rows collapse to that row for any pe") {
    AttentionBatch batch = make_random_batch(3, 1, 12, 8);
    for (std::int64_t i = 0; i < 12; ++i) {
        for (int d = 0; d < 8; ++d) {
            batch.v[static_cast<std::size_t>(i * 8 + d)] = static_cast<double>(d) - 3.5;
        }
    }
    const RotaryBasis basis = RotaryBasis::create(8);
    const RelPositionMatrix pe = build_pe_matrix(MappingConfig{12, 5, 1, 1, 0});
    const DenseAttentionResult result = dense_oracle_attention(batch, pe, basis);
    for (std::int64_t i = 0; i < 12; ++i) {
        for (int d = 0; d < 8; ++d) {
            CHECK(result.output[static_cast<std::size_t>(i * 8 + d)] ==
                  doctest::Approx(static_cast<double>(d) - 3.5).epsilon(1e-12));
        }
    }
}

TEST_CASE("windowed partial attention") {
    const AttentionBatch batch = make_random_batch(21, 2, 20, 8);
    const RotaryBasis basis = RotaryBasis::create(8);
    const auto pos = iota_positions(20);

    SUBCASE("full causal filter equals plain attention") {
        const PartialAttention part = windowed_partial_attention(
            batch, pos, pos, [](std::int64_t, std::int64_t) { return true; }, basis);
        const auto plain = plain_rope_attention(batch, basis);
        CHECK(max_abs_diff(part.output, plain.output) < 1e-10);
        CHECK(max_abs_diff(part.lse, plain.lse) < 1e-10);
        CHECK(part.visited_pairs == 20 * 21 / 2);
    }

    SUBCASE("self-only filter returns V and diagonal logits") {
        const PartialAttention part = windowed_partial_attention(
            batch, pos, pos, [](std::int64_t i, std::int64_t j) { return i == j; }, basis);
        for (int h = 0; h < 2; ++h) {
            for (std::int64_t i = 0; i < 20; ++i) {
                const auto out = part.output_row(h, i);
                const auto v = batch.v_row(h, i);
                for (int d = 0; d < 8; ++d) {
                    CHECK(out[static_cast<std::size_t>(d)] ==
                          doctest::Approx(v[static_cast<std::size_t>(d)]).epsilon(1e-12));
                }
                const double diag =
                    relative_logit(batch.q_row(h, i), batch.k_row(h, i), 0, basis, batch.scale);
                CHECK(part.lse_at(h, i) == doctest::Approx(diag).epsilon(1e-9));
            }
        }
    }

    SUBCASE("head-band filter: exp(lse) matches brute-force partial sums") {
        const std::int64_t s1 = 3;
        const PartialAttention part = windowed_partial_attention(
            batch, pos, pos, [s1](std::int64_t i, std::int64_t j) { return i - j <= s1; }, basis);
        for (int h = 0; h < 2; ++h) {
            for (std::int64_t i = 0; i < 20; ++i) {
                std::vector<double> terms;
                for (std::int64_t j = std::max<std::int64_t>(0, i - s1); j <= i; ++j) {
                    terms.push_back(std::exp(relative_logit(batch.q_row(h, i), batch.k_row(h, j),
                                                            j - i, basis, batch.scale)));
                }
                const double direct = kahan_sum(terms);
                CHECK(std::exp(part.lse_at(h, i)) == doctest::Approx(direct).epsilon(1e-10));
            }
        }
    }

    SUBCASE("rows with empty visited sets carry -inf and zero output") {
        const PartialAttention part = windowed_partial_attention(
            batch, pos, pos, [](std::int64_t, std::int64_t) { return false; }, basis);
        for (int h = 0; h < 2; ++h) {
            for (std::int64_t i = 0; i < 20; ++i) {
                CHECK(part.lse_at(h, i) == -std::numeric_limits<double>::infinity());
                for (const double x : part.output_row(h, i)) CHECK(x == 0.0);
            }
        }
        CHECK(part.visited_pairs == 0);
    }

    SUBCASE("bad position list length throws") {
        const auto short_pos = iota_positions(19);
        CHECK_THROWS_AS(windowed_partial_attention(
                            batch, short_pos, pos,
                            [](std::int64_t, std::int64_t) { return true; }, basis),
                        precondition_error);
    }
}

TEST_CASE("softmax outputs stay in the convex hull of visited V rows") {
    const AttentionBatch batch = make_random_batch(43, 2, 24, 8);
    const RotaryBasis basis = RotaryBasis::create(8);
    const DenseAttentionResult result =
        dense_oracle_attention(batch, build_pe_matrix(MappingConfig{24, 10, 2, 2, 0}), basis);
    for (int h = 0; h < 2; ++h) {
        for (std::int64_t i = 0; i < 24; ++i) {
            for (int d = 0; d < 8; ++d) {
                double lo = 1e300, hi = -1e300;
                for (std::int64_t j = 0; j <= i; ++j) {
                    const double x = batch.v_row(h, j)[static_cast<std::size_t>(d)];
                    lo = std::min(lo, x);
                    hi = std::max(hi, x);
                }
                const double y =
                    result.output[(static_cast<std::size_t>(h) * 24 + static_cast<std::size_t>(i)) * 8 +
                                  static_cast<std::size_t>(d)];
                CHECK(y >= lo - 1e-12);
                CHECK(y <= hi + 1e-12);
            }
        }
    }
}

TEST_CASE("lse correctness against compensated summation") {
    const AttentionBatch batch = make_random_batch(47, 1, 32, 16);
    const RotaryBasis basis = RotaryBasis::create(16);
    const RelPositionMatrix pe = build_index_pe_matrix(MappingConfig{32, 12, 3, 3, 0});
    const DenseAttentionResult result = dense_oracle_attention(batch, pe, basis);
    for (std::int64_t i = 0; i < 32; ++i) {
        std::vector<double> terms;
        for (std::int64_t j = 0; j <= i; ++j) {
            terms.push_back(std::exp(relative_logit(batch.q_row(0, i), batch.k_row(0, j),
                                                    -pe.at(i, j), basis, batch.scale)));
        }
        const double reference = kahan_sum(terms);
        CHECK(std::exp(result.lse[static_cast<std::size_t>(i)]) ==
              doctest::Approx(reference).epsilon(1e-12));
    }
}

TEST_CASE("tensor save/load round-trip") {
    const AttentionBatch batch = make_random_batch(7, 2, 6, 8);
    const auto dir = std::filesystem::temp_directory_path() / "lampe_tensor_test";
    std::filesystem::create_directories(dir);
    const auto path = dir / "q.f64";
    save_tensor(batch.q, 2, 6, 8, path);
    const LoadedTensor loaded = load_tensor(path);
    CHECK(loaded.heads == 2);
    CHECK(loaded.seq_len == 6);
    CHECK(loaded.head_dim == 8);
    CHECK(loaded.data == batch.q);
    std::filesystem::remove_all(dir);
}

TEST_CASE("shape mismatches are rejected") {
    const AttentionBatch batch = make_random_batch(3, 1, 8, 8);
    const RotaryBasis basis16 = RotaryBasis::create(16);
    CHECK_THROWS_AS(dense_oracle_attention(batch, causal_matrix(8), basis16),
                    precondition_error);
    CHECK_THROWS_AS(dense_oracle_attention(batch, causal_matrix(9), RotaryBasis::create(8)),
                    precondition_error);
    AttentionBatch broken = batch;
    broken.q.pop_back();
    CHECK_THROWS_AS(broken.validate(), invalid_config);
}
