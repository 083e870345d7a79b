#include <doctest.h>

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <new>

#include "sinkwatch/error.hpp"
#include "sinkwatch/streaming.hpp"

using namespace sinkwatch;

// Live-heap counter for the memory probe. Each block carries its size in a header.
namespace {
std::atomic<long long> g_live{0};
constexpr std::size_t kHeader = alignof(std::max_align_t);
} // namespace

void* operator new(std::size_t n)
{
    auto* p = static_cast<unsigned char*>(std::malloc(n + kHeader));
    if (!p) throw std::bad_alloc();
    *reinterpret_cast<std::size_t*>(p) = n;
    g_live += static_cast<long long>(n);
    return p + kHeader;
}

void operator delete(void* p) noexcept
{
    if (!p) return;
    auto* base = static_cast<unsigned char*>(p) - kHeader;
    g_live -= static_cast<long long>(*reinterpret_cast<std::size_t*>(base));
    std::free(base);
}

void operator delete(void* p, std::size_t) noexcept { operator delete(p); }

namespace {

StreamConfig small_config(std::uint64_t seed = 3)
{
    StreamConfig c;
    c.seed = seed;
    c.heads = 4;
    c.head_dim = 16;
    c.jitter.sigma = 0.3;
    return c;
}

long long live_after(std::int64_t frames)
{
    StreamRunner r(small_config());
    const long long before = g_live.load();
    for (std::int64_t i = 0; i < frames; ++i) (void)r.step();
    return g_live.load() - before;
}

} // namespace

TEST_CASE("next_positions continues across calls")
{
    StreamState s(1, 3, 12, 4);
    CHECK(next_positions(s, 3) == std::vector<std::int64_t>{0, 1, 2});
    CHECK(next_positions(s, 3) == std::vector<std::int64_t>{3, 4, 5});
    CHECK(s.next_position == 6);
    CHECK_THROWS_AS(next_positions(s, 0), ValidationError);
}

TEST_CASE("stream noise is reproducible and splits cleanly")
{
    StreamState a(9, 3, 12, 4), b(9, 3, 12, 4);
    const auto x = stream_noise(a, 100);
    auto y = stream_noise(b, 40);
    const auto z = stream_noise(b, 60);
    y.insert(y.end(), z.begin(), z.end());
    CHECK(x == y);
    CHECK(a.rng_counter == 100);
    StreamState c(10, 3, 12, 4);
    CHECK(stream_noise(c, 100) != x);
}

TEST_CASE("stream noise moments over a million draws")
{
    StreamState s(2026, 3, 12, 4);
    const auto x = stream_noise(s, 1000000);
    double mean = 0.0, var = 0.0, lag = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        var += (x[i] - mean) * (x[i] - mean);
        if (i + 1 < x.size()) lag += (x[i] - mean) * (x[i + 1] - mean);
    }
    var /= static_cast<double>(x.size());
    lag /= static_cast<double>(x.size() - 1) * var;
    // Five standard errors at n = 1e6.
    CHECK(std::abs(mean) < 0.005);
    CHECK(std::abs(var - 1.0) < 0.007);
    CHECK(std::abs(lag) < 0.005);
}

TEST_CASE("windowed decode with ring 1 is memoryless")
{
    StreamState s(0, 3, 12, 1);
    for (std::int64_t f = 0; f < 20; ++f) {
        const Feature x{static_cast<double>(f), -2.0 * static_cast<double>(f)};
        CHECK(windowed_decode(s, f, x) == x);
    }
}

TEST_CASE("windowed decode weights and causality")
{
    StreamState s(0, 3, 12, 3);
    CHECK(windowed_decode(s, 0, {8.0}) == Feature{8.0});
    CHECK(windowed_decode(s, 1, {2.0})[0] == doctest::Approx((2.0 + 0.5 * 8.0) / 1.5));
    CHECK(windowed_decode(s, 2, {4.0})[0] == doctest::Approx((4.0 + 1.0 + 2.0) / 1.75));
    CHECK(windowed_decode(s, 3, {0.0})[0] == doctest::Approx((0.0 + 2.0 + 0.5) / 1.75));

    // Two streams that differ only from frame 10 on agree on every earlier output.
    StreamState a(0, 3, 12, 4), b(0, 3, 12, 4);
    for (std::int64_t f = 0; f < 20; ++f) {
        const double v = std::sin(0.7 * static_cast<double>(f));
        const auto ya = windowed_decode(a, f, {v});
        const auto yb = windowed_decode(b, f, {f >= 10 ? v + 5.0 : v});
        if (f < 10) CHECK(ya == yb);
        else CHECK(ya != yb);
    }
}

TEST_CASE("windowed decode rejects out-of-order frames")
{
    StreamState s(0, 3, 12, 4);
    (void)windowed_decode(s, 0, {1.0});
    CHECK_THROWS_AS(windowed_decode(s, 2, {1.0}), ValidationError);
    CHECK_THROWS_AS(windowed_decode(s, 0, {1.0}), ValidationError);
    CHECK_NOTHROW(windowed_decode(s, 1, {1.0}));
    CHECK_THROWS_AS(windowed_decode(s, 2, {1.0, 2.0}), ValidationError);
}

TEST_CASE("ring and cache stay bounded over a long stream")
{
    StreamRunner r(small_config());
    for (int i = 0; i < 10000; ++i) {
        const auto st = r.step();
        CHECK(st.decoded.size() == 4u * 8u);
        if (i % 97 == 0) {
            CHECK(r.state().decode_ring.size() <= r.state().ring_length);
            CHECK(r.state().cache.size() <= 12u);
        }
    }
    CHECK(r.state().next_position == 10003);
    const auto frames = r.state().cache.frames();
    CHECK(frames.front() == 0);
    CHECK(frames.back() == 10002);
}

TEST_CASE("live heap does not grow with stream length")
{
    (void)live_after(50); // warm lazily-initialised state
    const long long small = live_after(1000);
    const long long large = live_after(100000);
    CHECK(large <= small + 4096);
}

TEST_CASE("resume from a checkpoint reproduces the suffix")
{
    const auto cfg = small_config(17);
    StreamRunner full(cfg);
    std::vector<StreamStep> ref;
    nlohmann::json ck;
    for (int i = 0; i < 500; ++i) {
        if (i == 200) ck = full.checkpoint();
        ref.push_back(full.step());
    }
    CHECK(ck.at("next_position").get<std::int64_t>() == 203);

    // Round-trip through text as the CLI does.
    auto resumed = StreamRunner::resume(cfg, nlohmann::json::parse(ck.dump()));
    CHECK(resumed.checkpoint() == ck);
    for (int i = 200; i < 500; ++i) {
        const auto st = resumed.step();
        const auto& want = ref[static_cast<std::size_t>(i)];
        CHECK(st.frame == want.frame);
        CHECK(st.homogenization == want.homogenization);
        CHECK(st.collapse == want.collapse);
        CHECK(st.distance == want.distance);
        CHECK(st.drop == want.drop);
        CHECK(st.decoded == want.decoded);
    }
    CHECK(resumed.checkpoint() == full.checkpoint());
}

TEST_CASE("resume early in the stream and validation of bad checkpoints")
{
    const auto cfg = small_config(5);
    StreamRunner full(cfg);
    for (int i = 0; i < 4; ++i) (void)full.step();
    const auto ck = full.checkpoint();
    auto r = StreamRunner::resume(cfg, ck);
    for (int i = 0; i < 50; ++i) {
        const auto a = full.step();
        const auto b = r.step();
        CHECK(a.decoded == b.decoded);
    }

    auto missing = ck;
    missing.erase("rng_counter");
    CHECK_THROWS_AS(StreamRunner::resume(cfg, missing), ValidationError);
    auto wrong = ck;
    wrong["rng_counter"] = ck.at("rng_counter").get<std::uint64_t>() + 1;
    CHECK_THROWS_AS(StreamRunner::resume(cfg, wrong), ValidationError);
    auto frames = ck;
    frames["cache_frames"] = std::vector<std::int64_t>{0, 1, 2, 4};
    CHECK_THROWS_AS(StreamRunner::resume(cfg, frames), ValidationError);
}

TEST_CASE("stream config validation")
{
    auto c = small_config();
    c.window = 3;
    CHECK_THROWS_AS(StreamRunner{c}, ValidationError);
    c = small_config();
    c.head_dim = 15;
    CHECK_THROWS_AS(StreamRunner{c}, ValidationError);
    c = small_config();
    c.ring_length = 0;
    CHECK_THROWS_AS(StreamRunner{c}, ValidationError);
}
