// Serial vs OpenMP head-mean coherence profile.

#include <benchmark/benchmark.h>

#include <vector>

#include "sinkwatch/jitter.hpp"
#include "sinkwatch/phase.hpp"

namespace {

sinkwatch::HeadSpectra heads(int h)
{
    sinkwatch::JitterConfig jc;
    jc.heads = h;
    jc.sigma = 0.8;
    jc.seed = 1;
    return sinkwatch::make_head_spectra(jc);
}

template <void (*Kernel)(std::span<const sinkwatch::FrequencySpectrum>, std::int64_t, std::span<double>)>
void profile(benchmark::State& state)
{
    const auto hs = heads(static_cast<int>(state.range(1)));
    std::vector<double> out(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) {
        Kernel(hs.spectra, 0, out);
        benchmark::DoNotOptimize(out.data());
        benchmark::ClobberMemory();
    }
    state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(1));
}

} // namespace

BENCHMARK(profile<sinkwatch::profile_values_serial>)
    ->Name("profile/serial")
    ->ArgsProduct({{1024, 16384}, {1, 12}});
BENCHMARK(profile<sinkwatch::profile_values_parallel>)
    ->Name("profile/openmp")
    ->ArgsProduct({{1024, 16384}, {1, 12}});

BENCHMARK_MAIN();
