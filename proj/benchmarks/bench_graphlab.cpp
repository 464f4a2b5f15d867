#include <benchmark/benchmark.h>

#include "cavity/graphlab.hpp"
#include "cavity/model.hpp"

using namespace cavity;

static void BM_ExactPartition(benchmark::State& state) {
    Model model = make_potts_c(3, 0.5);
    auto inst = gen_null(static_cast<int>(state.range(0)), 2 * state.range(0), model, 11);
    for (auto _ : state) {
        auto res = exact_partition(inst, model);
        benchmark::DoNotOptimize(res.log_z);
    }
}
BENCHMARK(BM_ExactPartition)->Arg(8)->Arg(12);

static void BM_BpRun(benchmark::State& state) {
    Model model = make_potts_c(3, 0.5);
    auto inst = gen_null(static_cast<int>(state.range(0)), 2 * state.range(0), model, 11);
    for (auto _ : state) {
        auto res = bp_run(inst, model, 200, 0.2, 1e-10);
        benchmark::DoNotOptimize(res.bethe_log_z);
    }
}
BENCHMARK(BM_BpRun)->Arg(50)->Arg(500);

static void BM_GenTeacher(benchmark::State& state) {
    Model model = make_ksat(3, 1.0);
    std::vector<int> truth(200);
    for (size_t v = 0; v < truth.size(); ++v) truth[v] = static_cast<int>(v % 2);
    for (auto _ : state) {
        auto inst = gen_teacher(200, state.range(0), model, truth, 5);
        benchmark::DoNotOptimize(inst.constraints.size());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_GenTeacher)->Arg(10000);
