#include <benchmark/benchmark.h>

#include "lampe/pe_map.hpp"

using namespace lampe;

namespace {

MappingConfig sized_config(std::int64_t l) {
    return MappingConfig{l, 3 * l / 4, l / 16, l / 16, l / 2};
}

}  // namespace

static void BM_BuildPeMatrix(benchmark::State& state) {
    const MappingConfig cfg = sized_config(state.range(0));
    for (auto _ : state) {
        RelPositionMatrix pe = build_pe_matrix(cfg);
        benchmark::DoNotOptimize(pe.row(cfg.l - 1));
    }
    state.SetItemsProcessed(state.iterations() * cfg.l * (cfg.l + 1) / 2);
}
BENCHMARK(BM_BuildPeMatrix)->Arg(256)->Arg(1024)->Arg(4096)->Arg(16384);

static void BM_BuildIndexPeMatrix(benchmark::State& state) {
    const MappingConfig cfg = sized_config(state.range(0));
    for (auto _ : state) {
        RelPositionMatrix pe = build_index_pe_matrix(cfg);
        benchmark::DoNotOptimize(pe.row(cfg.l - 1));
    }
    state.SetItemsProcessed(state.iterations() * cfg.l * (cfg.l + 1) / 2);
}
BENCHMARK(BM_BuildIndexPeMatrix)->Arg(256)->Arg(1024)->Arg(4096)->Arg(16384);

static void BM_VerifyMonotonicity(benchmark::State& state) {
    const MappingConfig cfg = sized_config(state.range(0));
    const RelPositionMatrix pe = build_index_pe_matrix(cfg);
    for (auto _ : state) {
        const MonotonicityReport report = verify_monotonicity(pe);
        benchmark::DoNotOptimize(report.pass);
    }
    state.SetItemsProcessed(state.iterations() * pe.pair_count());
}
BENCHMARK(BM_VerifyMonotonicity)->Arg(1024)->Arg(4096)->Arg(16384);

static void BM_LampePePair(benchmark::State& state) {
    const MappingConfig cfg = sized_config(4096);
    std::int64_t i = 4095, j = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(lampe_pe(i, j, cfg));
        j = (j + 97) % 4096;
        if (j > i) j = 0;
    }
}
BENCHMARK(BM_LampePePair);

BENCHMARK_MAIN();
