#include "sinkwatch/streaming.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "sinkwatch/error.hpp"
#include "sinkwatch/rng.hpp"
#include "sinkwatch/simulator.hpp"

namespace sinkwatch {

namespace {

constexpr std::uint64_t kNoiseStream = 0x57e0;
constexpr std::uint64_t kStaticStream = 0x57e1;

double l2(const Feature& a, const Feature& b)
{
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(acc);
}

} // namespace

StreamState::StreamState(std::uint64_t seed_, int sink_count, int window, std::size_t ring_length_)
    : seed(seed_), cache(sink_count, window), ring_length(ring_length_)
{
    require(ring_length >= 1, "decode ring length must be >= 1");
}

std::vector<std::int64_t> next_positions(StreamState& state, std::int64_t count)
{
    require(count >= 1, "position count must be >= 1");
    std::vector<std::int64_t> out(static_cast<std::size_t>(count));
    for (auto& p : out) p = state.next_position++;
    return out;
}

std::vector<double> stream_noise(StreamState& state, std::size_t n)
{
    std::vector<double> out(n);
    for (auto& v : out) v = normal_at(state.seed, kNoiseStream, state.rng_counter++);
    return out;
}

Feature windowed_decode(StreamState& state, std::int64_t frame_index, Feature latent)
{
    require(frame_index == state.last_decoded + 1, "out-of-order frame " + std::to_string(frame_index) +
                                                       " (expected " + std::to_string(state.last_decoded + 1) + ")");
    if (!state.decode_ring.empty()) {
        require(latent.size() == state.decode_ring.back().size(), "decoded frame dimension changed");
    }
    state.last_decoded = frame_index;
    state.decode_ring.push_back(std::move(latent));
    while (state.decode_ring.size() > state.ring_length) state.decode_ring.pop_front();

    Feature out(state.decode_ring.back().size(), 0.0);
    double w = 1.0, total = 0.0;
    for (auto it = state.decode_ring.rbegin(); it != state.decode_ring.rend(); ++it, w *= 0.5) {
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += w * (*it)[i];
        total += w;
    }
    for (auto& v : out) v /= total;
    return out;
}

void StreamConfig::validate() const
{
    require(heads >= 1, "heads must be >= 1");
    require(head_dim >= 2 && head_dim % 2 == 0, "head_dim must be even and >= 2");
    require(sink_count >= 1, "sink count must be >= 1");
    require(window > sink_count, "window must exceed sink count");
    require(value_dim >= 1, "value_dim must be >= 1");
    require(ring_length >= 1, "ring length must be >= 1");
    require(metric_window >= 2, "metric window must be >= 2");
    auto jc = jitter;
    jc.heads = heads;
    jc.head_dim = head_dim;
    jc.validate();
}

std::size_t StreamConfig::noise_per_frame() const
{
    const auto H = static_cast<std::size_t>(heads);
    const auto K = static_cast<std::size_t>(head_dim / 2);
    return 2 * H * K + H * static_cast<std::size_t>(value_dim); // key phases, query phases, values
}

StreamRunner::StreamRunner(StreamConfig config)
    : config_(std::move(config)),
      state_(config_.seed, config_.sink_count, config_.window, config_.ring_length),
      tail_(static_cast<std::size_t>(config_.metric_window), config_.metric_percentile)
{
    config_.validate();
    auto jc = config_.jitter;
    jc.heads = config_.heads;
    jc.head_dim = config_.head_dim;
    jc.seed = config_.seed;
    spectra_ = make_head_spectra(jc);

    const auto H = static_cast<std::size_t>(config_.heads);
    const auto K = static_cast<std::size_t>(config_.head_dim / 2);
    const auto amps = content_amplitudes(make_frequencies(10000.0, config_.head_dim), config_.train_len);
    const double gain = std::sqrt(config_.logit_gain * std::sqrt(static_cast<double>(config_.head_dim)));
    for (double a : amps) amp_.push_back(std::sqrt(a) * gain);
    for (std::size_t i = 0; i < H * K; ++i) {
        phi0_.push_back(-std::numbers::pi + 2.0 * std::numbers::pi * uniform_at(config_.seed, kStaticStream, i));
    }
    const std::size_t F = H * static_cast<std::size_t>(config_.value_dim);
    for (std::size_t i = 0; i < F; ++i) x0_.push_back(normal_at(config_.seed, kStaticStream, H * K + i));
    prime_sinks();
}

void StreamRunner::prime_sinks()
{
    for (int s = 0; s < config_.sink_count; ++s) {
        const auto pos = next_positions(state_, 1).front();
        state_.cache.push(make_entry(pos));
    }
}

CacheEntry StreamRunner::make_entry(std::int64_t frame)
{
    const auto H = static_cast<std::size_t>(config_.heads);
    const auto K = static_cast<std::size_t>(config_.head_dim / 2);
    const auto base = static_cast<std::uint64_t>(frame) * config_.noise_per_frame();
    const bool sink = frame < config_.sink_count;
    const double gain = sink ? 1.0 + config_.sink_salience : 1.0;

    CacheEntry e;
    e.frame = frame;
    e.keys.resize(H * K * 2);
    for (std::size_t p = 0; p < H * K; ++p) {
        const double phi = phi0_[p] + config_.content_drift * normal_at(state_.seed, kNoiseStream, base + p);
        const double a = amp_[p % K] * gain;
        e.keys[2 * p] = a * std::cos(phi);
        e.keys[2 * p + 1] = a * std::sin(phi);
    }
    e.values = x0_;
    if (!sink) {
        const std::size_t off = base + 2 * H * K;
        for (std::size_t i = 0; i < e.values.size(); ++i) e.values[i] += normal_at(state_.seed, kNoiseStream, off + i);
    }
    state_.rng_counter = std::max(state_.rng_counter, base + config_.noise_per_frame());
    return e;
}

std::vector<double> StreamRunner::query_for(std::int64_t frame)
{
    const auto H = static_cast<std::size_t>(config_.heads);
    const auto K = static_cast<std::size_t>(config_.head_dim / 2);
    const auto base = static_cast<std::uint64_t>(frame) * config_.noise_per_frame() + H * K;
    std::vector<double> q(H * K * 2);
    for (std::size_t p = 0; p < H * K; ++p) {
        const double phi = phi0_[p] + config_.content_drift * normal_at(state_.seed, kNoiseStream, base + p);
        q[2 * p] = amp_[p % K] * std::cos(phi);
        q[2 * p + 1] = amp_[p % K] * std::sin(phi);
    }
    return q;
}

StreamStep StreamRunner::step()
{
    const auto frame = next_positions(state_, 1).front();
    state_.cache.push(make_entry(frame));
    auto r = attend(query_for(frame), frame, state_.cache, spectra_, {true, config_.tau, config_.rho});

    StreamStep out;
    out.frame = frame;
    out.homogenization = r.snapshot.homogenization;
    out.collapse = r.snapshot.collapse;
    events_ += out.collapse ? 1 : 0;

    double best = l2(r.output, state_.cache.at(0).values);
    for (int s = 1; s < config_.sink_count; ++s) {
        best = std::min(best, l2(r.output, state_.cache.at(static_cast<std::size_t>(s)).values));
    }
    out.distance = best;
    if (tail_.ready()) out.drop = std::max(0.0, tail_.value() - best);
    tail_.push(best);

    if (state_.last_decoded < 0) state_.last_decoded = frame - 1;
    out.decoded = windowed_decode(state_, frame, std::move(r.output));
    return out;
}

nlohmann::json StreamRunner::checkpoint() const
{
    return {
        {"seed", state_.seed},
        {"rng_counter", state_.rng_counter},
        {"next_position", state_.next_position},
        {"cache_frames", state_.cache.frames()},
        {"ring_length", state_.ring_length},
    };
}

StreamRunner StreamRunner::resume(StreamConfig config, const nlohmann::json& checkpoint)
{
    for (const char* key : {"seed", "rng_counter", "next_position", "cache_frames", "ring_length"}) {
        require(checkpoint.contains(key), std::string("checkpoint lacks '") + key + "'");
    }
    config.seed = checkpoint.at("seed").get<std::uint64_t>();
    config.ring_length = checkpoint.at("ring_length").get<std::size_t>();
    const auto target = checkpoint.at("next_position").get<std::int64_t>();
    const auto frames = checkpoint.at("cache_frames").get<std::vector<std::int64_t>>();

    StreamRunner runner(config);
    // Inputs are pure in the frame index, so replaying the frames that still
    // influence state (cache, decode ring, metric tail) reproduces it exactly.
    const std::int64_t history = static_cast<std::int64_t>(
        std::max<std::size_t>({static_cast<std::size_t>(config.window), config.ring_length,
                               static_cast<std::size_t>(config.metric_window)}));
    std::int64_t start = std::max<std::int64_t>(config.sink_count, target - history);
    if (start > config.sink_count) {
        std::vector<CacheEntry> entries;
        for (int s = 0; s < config.sink_count; ++s) entries.push_back(runner.make_entry(s));
        const std::int64_t keep = config.window - config.sink_count;
        for (std::int64_t f = std::max<std::int64_t>(config.sink_count, start - keep); f < start; ++f) {
            entries.push_back(runner.make_entry(f));
        }
        runner.state_.cache = SinkKvCache::restore(config.sink_count, config.window, std::move(entries));
        runner.state_.next_position = start;
    }
    runner.state_.last_decoded = -1;
    while (runner.state_.next_position < target) runner.step();
    runner.events_ = 0;

    require(runner.state_.cache.frames() == frames, "checkpoint cache frames disagree with the replayed state");
    require(runner.state_.rng_counter == checkpoint.at("rng_counter").get<std::uint64_t>(),
            "checkpoint rng_counter disagrees with the replayed state");
    return runner;
}

} // namespace sinkwatch
