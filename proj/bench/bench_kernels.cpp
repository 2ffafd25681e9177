// Serial reference kernels vs their OpenMP counterparts, plus one training epoch.
//
//   ./bench_kernels --benchmark_filter=Forward

#include "duprg/cae.hpp"
#include "duprg/kernels.hpp"
#include "duprg/synth.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace duprg;

namespace {

Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    Matrix m(rows, cols);
    for (double& v : m.data) v = g(rng);
    return m;
}

// Shapes: rows = prompts (M*C), width = embedding dimension.
template <bool Parallel>
void BM_LinearForward(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto d = static_cast<std::size_t>(state.range(1));
    const Matrix in = random_matrix(n, d, 1);
    const Matrix w = random_matrix(d, d, 2);
    const std::vector<double> b(d, 0.1);
    Matrix out(n, d);
    for (auto _ : state) {
        if constexpr (Parallel) kernels::linear_forward(in, w, b, out);
        else kernels::reference::linear_forward(in, w, b, out);
        benchmark::DoNotOptimize(out.data.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * d * d));
}

template <bool Parallel>
void BM_LinearBackwardParams(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto d = static_cast<std::size_t>(state.range(1));
    const Matrix grad_out = random_matrix(n, d, 3);
    const Matrix in = random_matrix(n, d, 4);
    Matrix gw(d, d);
    std::vector<double> gb(d);
    for (auto _ : state) {
        if constexpr (Parallel) kernels::linear_backward_params(grad_out, in, gw, gb);
        else kernels::reference::linear_backward_params(grad_out, in, gw, gb);
        benchmark::DoNotOptimize(gw.data.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * d * d));
}

template <bool Parallel>
void BM_ArgmaxCosine(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto c = static_cast<std::size_t>(state.range(1));
    constexpr std::size_t d = 512;
    const Matrix queries = random_matrix(n, d, 5);
    const Matrix reps = random_matrix(c, d, 6);
    std::vector<double> norms(c);
    for (std::size_t i = 0; i < c; ++i) norms[i] = norm(reps.row(i));
    for (auto _ : state) {
        auto pred = Parallel ? kernels::argmax_cosine(queries, reps, norms)
                             : kernels::reference::argmax_cosine(queries, reps, norms);
        benchmark::DoNotOptimize(pred.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}

void BM_TrainEpoch(benchmark::State& state) {
    SynthSpec spec;
    spec.classes = static_cast<std::size_t>(state.range(0));
    spec.domains = 10;
    spec.dims = static_cast<std::size_t>(state.range(1));
    const PromptTensor t = generate(spec).prompts;
    CaeConfig cfg;
    cfg.epochs = 1;
    for (auto _ : state) {
        auto r = train(t, cfg);
        benchmark::DoNotOptimize(r.model.layers[0].weight.data.data());
    }
    state.counters["threads"] = kernels::max_threads();
}

} // namespace

// PACS-like (10 x 7) and DomainNet-like (10 x 345) prompt tensors at CLIP width.
BENCHMARK(BM_LinearForward<false>)->Args({70, 512})->Args({3450, 512})->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_LinearForward<true>)->Args({70, 512})->Args({3450, 512})->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_LinearBackwardParams<false>)->Args({70, 512})->Args({3450, 512})->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_LinearBackwardParams<true>)->Args({70, 512})->Args({3450, 512})->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_ArgmaxCosine<false>)->Args({2000, 7})->Args({2000, 345})->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_ArgmaxCosine<true>)->Args({2000, 7})->Args({2000, 345})->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_TrainEpoch)->Args({7, 512})->Args({65, 512})->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
