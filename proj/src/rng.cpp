#include "sinkwatch/rng.hpp"

#include <cmath>
#include <numbers>
#include <numeric>

#include "sinkwatch/error.hpp"

namespace sinkwatch {

namespace philox {

namespace {

constexpr std::uint32_t kM0 = 0xD2511F53u;
constexpr std::uint32_t kM1 = 0xCD9E8D57u;
constexpr std::uint32_t kW0 = 0x9E3779B9u;
constexpr std::uint32_t kW1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo)
{
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}

inline Counter round(const Counter& c, const Key& k)
{
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kM0, c[0], hi0, lo0);
    mulhilo(kM1, c[2], hi1, lo1);
    return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
}

} // namespace

Counter block(Counter ctr, Key key)
{
    for (int r = 0; r < 10; ++r) {
        if (r > 0) {
            key[0] += kW0;
            key[1] += kW1;
        }
        ctr = round(ctr, key);
    }
    return ctr;
}

} // namespace philox

namespace {

philox::Counter draw(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter)
{
    const philox::Counter ctr = {static_cast<std::uint32_t>(counter), static_cast<std::uint32_t>(counter >> 32),
                                 static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    const philox::Key key = {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
    return philox::block(ctr, key);
}

inline double to_unit(std::uint32_t hi, std::uint32_t lo)
{
    const std::uint64_t bits = ((static_cast<std::uint64_t>(hi) << 32) | lo) >> 11;
    return static_cast<double>(bits) * 0x1.0p-53;
}

} // namespace

double uniform_at(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter)
{
    const auto b = draw(seed, stream, counter);
    return to_unit(b[0], b[1]);
}

double normal_at(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter)
{
    const auto b = draw(seed, stream, counter);
    const double u1 = 1.0 - to_unit(b[0], b[1]); // (0, 1]
    const double u2 = to_unit(b[2], b[3]);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t CounterRng::below(std::uint64_t n)
{
    require(n > 0, "below() needs n > 0");
    // Floating multiply is exact enough for the small n used here (head counts).
    const auto v = static_cast<std::uint64_t>(uniform() * static_cast<double>(n));
    return v < n ? v : n - 1;
}

std::vector<int> sample_without_replacement(CounterRng& rng, int n, int k)
{
    require(n >= 0 && k >= 0 && k <= n, "sample size out of range");
    std::vector<int> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), 0);
    for (int i = 0; i < k; ++i) {
        const auto j = i + static_cast<int>(rng.below(static_cast<std::uint64_t>(n - i)));
        std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
    }
    idx.resize(static_cast<std::size_t>(k));
    return idx;
}

} // namespace sinkwatch
