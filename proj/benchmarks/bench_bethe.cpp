#include <benchmark/benchmark.h>

#include "cavity/bethe.hpp"
#include "cavity/model.hpp"

using namespace cavity;

static void BM_BetheFunctionalPotts(benchmark::State& state) {
    Model model = make_potts_c(3, 0.5);
    Population pop = init_population(InitKind::planted, 3, 20000, 0.05, 1);
    for (auto _ : state) {
        auto est = bethe_functional(pop, model, 4.0, state.range(0), 7, 1);
        benchmark::DoNotOptimize(est.mean);
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_BetheFunctionalPotts)->Arg(10000)->Arg(100000);

static void BM_BethePottsClosedForm(benchmark::State& state) {
    Population pop = init_population(InitKind::planted, 3, 20000, 0.05, 1);
    for (auto _ : state) {
        auto est = bethe_potts(3, 4.0, 1.0, pop, state.range(0), 7, 1);
        benchmark::DoNotOptimize(est.mean);
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_BethePottsClosedForm)->Arg(100000);

static void BM_LdgmBethe(benchmark::State& state) {
    Population pop = init_population(InitKind::planted, 2, 20000, 0.2, 1);
    auto fields = to_sym_fields(pop);
    for (auto _ : state) {
        auto est = ldgm_bethe(3, 2.0, 0.1, fields, state.range(0), 7, 1);
        benchmark::DoNotOptimize(est.mean);
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_LdgmBethe)->Arg(100000);
