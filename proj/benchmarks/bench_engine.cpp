#include <benchmark/benchmark.h>

#include "sirmarket/analysis.hpp"
#include "sirmarket/epidemic.hpp"
#include "sirmarket/market.hpp"
#include "sirmarket/market_rational.hpp"

using namespace sirmarket;

namespace {

Grid grid_for(benchmark::State& state) {
    return Grid::make(0, 300, 1.0 / static_cast<double>(state.range(0)));
}

void BM_SimulateEpidemic(benchmark::State& state) {
    const Grid grid = grid_for(state);
    for (auto _ : state) {
        auto tr = simulate_epidemic(EpidemicParams{}, grid);
        benchmark::DoNotOptimize(tr);
    }
    state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(grid.steps()));
}
BENCHMARK(BM_SimulateEpidemic)->Arg(10)->Arg(100)->Arg(1000);

void BM_SimulateMyopic(benchmark::State& state) {
    const Grid grid = grid_for(state);
    for (auto _ : state) {
        auto tr = simulate_myopic(EpidemicParams{}, SupplyCurve{}, grid);
        benchmark::DoNotOptimize(tr);
    }
    state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(grid.steps()));
}
BENCHMARK(BM_SimulateMyopic)->Arg(10)->Arg(100)->Arg(1000);

void BM_SolvePlateau(benchmark::State& state) {
    const Grid grid = grid_for(state);
    for (auto _ : state) {
        auto s = solve_plateau(EpidemicParams{}, SupplyCurve{}, grid);
        benchmark::DoNotOptimize(s);
    }
}
BENCHMARK(BM_SolvePlateau)->Arg(100)->Unit(benchmark::kMillisecond);

void BM_FinalSize(benchmark::State& state) {
    EpidemicParams p;
    for (auto _ : state) {
        benchmark::DoNotOptimize(steady_state_recovered(p));
    }
}
BENCHMARK(BM_FinalSize);

// whole default sweep, single worker
void BM_DefaultSweep(benchmark::State& state) {
    const Grid grid = Grid::make(0, 300, 1e-2);
    const SweepSpec spec = default_sweep();
    for (auto _ : state) {
        auto rows = parameter_sweep(EpidemicParams{}, SupplyCurve{}, grid, spec, ScenarioSet{}, 1);
        benchmark::DoNotOptimize(rows);
    }
}
BENCHMARK(BM_DefaultSweep)->Unit(benchmark::kMillisecond)->Iterations(3);

}  // namespace

BENCHMARK_MAIN();
