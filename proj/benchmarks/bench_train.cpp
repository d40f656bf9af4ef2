#include <benchmark/benchmark.h>

#include "topkfs/data.hpp"
#include "topkfs/trainer.hpp"

using namespace topkfs;

namespace {

Dataset bench_dataset(int n, int d) {
    SynthSpec spec;
    spec.n = n;
    spec.d = d;
    spec.g = d / 10 + 1;
    spec.tasks = {SynthTask{TaskKind::classification, 4, 0.0}};
    spec.noise_sigma = 0.5;
    spec.seed = 7;
    return make_split(generate_synthetic(spec), 7);
}

ModelConfig bench_model(int d) {
    ModelConfig model;
    model.d = d;
    model.k_final = d / 10 + 1;
    model.encoder_layers = {32};
    model.latent_dim = 16;
    model.tasks = {TaskSpec{"task0", TaskKind::classification, 4, 1}};
    return model;
}

}  // namespace

// One full epoch of joint selection + prediction training.
static void BM_TrainEpoch(benchmark::State& state) {
    const int d = static_cast<int>(state.range(0));
    const Dataset ds = bench_dataset(1000, d);
    ModelConfig model = bench_model(d);
    TrainConfig config;
    config.epochs = 1;
    config.batch_size = 128;
    config.eval_every = 0;
    for (auto _ : state) {
        auto result = train(ds, model, config);
        benchmark::DoNotOptimize(result.second.loss_trace.data());
    }
    state.SetComplexityN(d);
}
BENCHMARK(BM_TrainEpoch)->RangeMultiplier(2)->Range(32, 256)->Complexity()->Unit(benchmark::kMillisecond);

static void BM_Evaluate(benchmark::State& state) {
    const int d = static_cast<int>(state.range(0));
    const Dataset ds = bench_dataset(1000, d);
    ModelConfig model = bench_model(d);
    TrainConfig config;
    config.epochs = 1;
    config.batch_size = 128;
    config.eval_every = 0;
    auto [params, report] = train(ds, model, config);
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            evaluate(params, ds, Split::test, resolve_tasks(model, ds).tasks, model.k_final));
    }
}
BENCHMARK(BM_Evaluate)->RangeMultiplier(2)->Range(32, 256)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
