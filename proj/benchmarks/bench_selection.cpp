#include <benchmark/benchmark.h>

#include <vector>

#include "topkfs/autodiff.hpp"
#include "topkfs/rng.hpp"
#include "topkfs/selection.hpp"

using namespace topkfs;

namespace {

std::vector<double> random_scores(int d, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> s(static_cast<std::size_t>(d));
    for (double& v : s) v = rng.uniform(-2.0, 2.0);
    return s;
}

}  // namespace

static void BM_RelaxedPermutationForward(benchmark::State& state) {
    const int d = static_cast<int>(state.range(0));
    const std::vector<double> s = random_scores(d, 1);
    for (auto _ : state) {
        Tape tape;
        Tensor scores = Tensor::from({d}, s);
        benchmark::DoNotOptimize(relaxed_permutation(tape, scores, 0.5).pi.values().data());
    }
    state.SetComplexityN(d);
}
BENCHMARK(BM_RelaxedPermutationForward)->RangeMultiplier(2)->Range(16, 512)->Complexity();

static void BM_StraightThroughMaskBackward(benchmark::State& state) {
    const int d = static_cast<int>(state.range(0));
    const std::vector<double> s = random_scores(d, 2);
    const int k = d / 4 + 1;
    for (auto _ : state) {
        Tape tape;
        Tensor scores = Tensor::from({d}, s, true);
        SelectionMask mask = straight_through_mask(tape, scores, 0.5, k, nullptr, 0.0);
        Tensor loss = reduce_sum(tape, mask.st);
        tape.backward(loss);
        benchmark::DoNotOptimize(scores.grad().data());
    }
    state.SetComplexityN(d);
}
BENCHMARK(BM_StraightThroughMaskBackward)->RangeMultiplier(2)->Range(16, 512)->Complexity();

static void BM_HardTopK(benchmark::State& state) {
    const int d = static_cast<int>(state.range(0));
    const std::vector<double> s = random_scores(d, 3);
    for (auto _ : state) {
        benchmark::DoNotOptimize(topk_indices(s, d / 4 + 1));
    }
}
BENCHMARK(BM_HardTopK)->RangeMultiplier(4)->Range(64, 4096);

static void BM_PlackettLuceLogProb(benchmark::State& state) {
    const int d = static_cast<int>(state.range(0));
    const std::vector<double> s = random_scores(d, 4);
    std::vector<int> ranking(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) ranking[static_cast<std::size_t>(i)] = i;
    for (auto _ : state) {
        benchmark::DoNotOptimize(pl_log_prob(s, ranking));
    }
}
BENCHMARK(BM_PlackettLuceLogProb)->RangeMultiplier(4)->Range(16, 1024);
