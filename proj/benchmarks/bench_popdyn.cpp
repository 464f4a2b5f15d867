#include <benchmark/benchmark.h>

#include "cavity/model.hpp"
#include "cavity/popdyn.hpp"

using namespace cavity;

static void BM_SweepPotts3(benchmark::State& state) {
    Model model = make_potts_c(3, 0.5);
    Population pop = init_population(InitKind::planted, 3, state.range(0), 0.05, 1);
    uint64_t seed = 2;
    for (auto _ : state) {
        pop = sweep(pop, model, 4.0, seed++, 1);
        benchmark::DoNotOptimize(pop.data().data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SweepPotts3)->Arg(10000)->Arg(100000);

static void BM_SweepColoringClosedForm(benchmark::State& state) {
    Population pop = init_population(InitKind::planted, 10, state.range(0), 0.05, 1);
    uint64_t seed = 2;
    for (auto _ : state) {
        pop = sweep_potts(pop, 10, 1.0, 42.0, seed++, 1);
        benchmark::DoNotOptimize(pop.data().data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SweepColoringClosedForm)->Arg(10000);

static void BM_SweepKsat(benchmark::State& state) {
    Model model = make_ksat(3, 1.0);
    Population pop = init_population(InitKind::planted, 2, state.range(0), 0.05, 1);
    uint64_t seed = 2;
    for (auto _ : state) {
        pop = sweep(pop, model, 3.0, seed++, 1);
        benchmark::DoNotOptimize(pop.data().data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SweepKsat)->Arg(10000);

static void BM_W1Distance(benchmark::State& state) {
    Population a = init_population(InitKind::planted, 3, state.range(0), 0.1, 1);
    Population b = init_population(InitKind::planted, 3, state.range(0), 0.3, 2);
    for (auto _ : state) {
        double w = w1_distance(a, b, 16, 7);
        benchmark::DoNotOptimize(w);
    }
}
BENCHMARK(BM_W1Distance)->Arg(10000)->Arg(100000);
