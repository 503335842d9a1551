#include <benchmark/benchmark.h>

#include "lampe/attention.hpp"
#include "lampe/three_pass.hpp"

using namespace lampe;

namespace {

MappingConfig sized_config(std::int64_t l) {
    return MappingConfig{l, 3 * l / 4, l / 16, l / 16, l / 2};
}

}  // namespace

static void BM_DenseOracle(benchmark::State& state) {
    const std::int64_t l = state.range(0);
    const MappingConfig cfg = sized_config(l);
    const RotaryBasis basis = RotaryBasis::create(16);
    const AttentionBatch batch = make_random_batch(1, 2, l, 16);
    const RelPositionMatrix pe = build_index_pe_matrix(cfg);
    for (auto _ : state) {
        const DenseAttentionResult out = dense_oracle_attention(batch, pe, basis);
        benchmark::DoNotOptimize(out.lse.data());
    }
}
BENCHMARK(BM_DenseOracle)->Arg(64)->Arg(128)->Arg(256);

static void BM_LampeAttention(benchmark::State& state) {
    const std::int64_t l = state.range(0);
    const MappingConfig cfg = sized_config(l);
    const RotaryBasis basis = RotaryBasis::create(16);
    const AttentionBatch batch = make_random_batch(1, 2, l, 16);
    for (auto _ : state) {
        const MergedAttention out = lampe_attention(batch, cfg, basis);
        benchmark::DoNotOptimize(out.output.data());
    }
}
BENCHMARK(BM_LampeAttention)->Arg(64)->Arg(128)->Arg(256);

static void BM_MergeTwo(benchmark::State& state) {
    const std::int64_t rows = 256;
    PartialAttention a = make_empty_partial(2, 16, 0, rows);
    PartialAttention b = make_empty_partial(2, 16, 0, rows);
    for (std::size_t k = 0; k < a.lse.size(); ++k) {
        a.lse[k] = static_cast<double>(k % 17) - 8.0;
        b.lse[k] = static_cast<double>(k % 11) - 5.0;
    }
    for (std::size_t k = 0; k < a.output.size(); ++k) {
        a.output[k] = static_cast<double>(k % 7);
        b.output[k] = static_cast<double>(k % 5);
    }
    for (auto _ : state) {
        const PartialAttention merged = merge_two(a, b);
        benchmark::DoNotOptimize(merged.output.data());
    }
    state.SetItemsProcessed(state.iterations() * rows * 2);
}
BENCHMARK(BM_MergeTwo);

BENCHMARK_MAIN();
