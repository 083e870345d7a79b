#pragma once

#include <array>
#include <cstdint>
#include <string_view>
#include <vector>

namespace sinkwatch {

// Philox4x32-10 (Salmon et al., SC'11). Every draw is a pure function of
// (seed, stream, counter), which is what lets streams resume from a checkpoint.
namespace philox {

using Counter = std::array<std::uint32_t, 4>;
using Key = std::array<std::uint32_t, 2>;

inline constexpr std::string_view kName = "philox4x32-10/v1";

Counter block(Counter ctr, Key key);

} // namespace philox

// 53-bit uniform in [0, 1).
double uniform_at(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter);
// Standard normal via Box-Muller on one block; one normal per counter.
double normal_at(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter);

// Sequential convenience wrapper; `counter` is the index of the next draw.
class CounterRng {
public:
    CounterRng(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter = 0)
        : seed_(seed), stream_(stream), counter_(counter)
    {
    }

    double uniform() { return uniform_at(seed_, stream_, counter_++); }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    double normal() { return normal_at(seed_, stream_, counter_++); }
    std::uint64_t below(std::uint64_t n); // uniform integer in [0, n)

    [[nodiscard]] std::uint64_t counter() const { return counter_; }
    [[nodiscard]] std::uint64_t seed() const { return seed_; }
    [[nodiscard]] std::uint64_t stream() const { return stream_; }

private:
    std::uint64_t seed_;
    std::uint64_t stream_;
    std::uint64_t counter_;
};

// First `k` entries of a seeded Fisher-Yates shuffle of 0..n-1.
std::vector<int> sample_without_replacement(CounterRng& rng, int n, int k);

} // namespace sinkwatch
