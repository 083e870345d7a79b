#pragma once

#include <cstdint>
#include <deque>
#include <span>
#include <vector>

#include <json.hpp>

#include "sinkwatch/jitter.hpp"
#include "sinkwatch/kv_cache.hpp"
#include "sinkwatch/metrics.hpp"

namespace sinkwatch {

struct StreamState {
    std::uint64_t seed = 0;
    std::int64_t next_position = 0;
    std::uint64_t rng_counter = 0;
    SinkKvCache cache{3, 12};
    std::deque<Feature> decode_ring;
    std::size_t ring_length = 4;
    std::int64_t last_decoded = -1;

    StreamState() = default;
    StreamState(std::uint64_t seed, int sink_count, int window, std::size_t ring_length);
};

std::vector<std::int64_t> next_positions(StreamState& state, std::int64_t count);

// Standard normals at counters [rng_counter, rng_counter + n); advances the counter.
std::vector<double> stream_noise(StreamState& state, std::size_t n);

// Fixed causal mix over the ring (weights 2^-age, normalised). Frames must be consecutive.
Feature windowed_decode(StreamState& state, std::int64_t frame_index, Feature latent);

struct StreamConfig {
    int heads = 12;
    int head_dim = 44;
    int window = 12;
    int sink_count = 3;
    int value_dim = 8;
    std::size_t ring_length = 4;
    double content_drift = 0.05;
    JitterConfig jitter{};
    double tau = 2.0;
    double rho = 0.75;
    double logit_gain = 12.0;
    double sink_salience = 0.8;
    int train_len = 132;
    int metric_window = 32;
    double metric_percentile = 90.0;
    std::uint64_t seed = 0;

    void validate() const;
    [[nodiscard]] std::size_t noise_per_frame() const;
};

struct StreamStep {
    std::int64_t frame = 0;
    double homogenization = 0.0;
    bool collapse = false;
    double distance = 0.0; // raw min-over-sinks distance of the decoded frame
    double drop = 0.0;     // against the running percentile of the trailing window
    Feature decoded;
};

// End-to-end streaming pipeline: positions, jittered rotation, attention step,
// incremental metric, windowed decode. Every frame's noise block sits at a
// fixed counter offset, so any frame's inputs are a pure function of (seed, frame).
class StreamRunner {
public:
    explicit StreamRunner(StreamConfig config);

    StreamStep step();

    [[nodiscard]] const StreamState& state() const { return state_; }
    [[nodiscard]] const StreamConfig& config() const { return config_; }
    [[nodiscard]] const HeadSpectra& spectra() const { return spectra_; }
    [[nodiscard]] std::int64_t events() const { return events_; }

    [[nodiscard]] nlohmann::json checkpoint() const;
    static StreamRunner resume(StreamConfig config, const nlohmann::json& checkpoint);

private:
    CacheEntry make_entry(std::int64_t frame);
    std::vector<double> query_for(std::int64_t frame);
    void prime_sinks();

    StreamConfig config_;
    HeadSpectra spectra_;
    StreamState state_;
    RunningPercentile tail_;
    std::vector<double> amp_, phi0_;
    Feature x0_;
    std::int64_t events_ = 0;
};

} // namespace sinkwatch
