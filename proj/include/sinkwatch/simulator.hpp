#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "sinkwatch/jitter.hpp"
#include "sinkwatch/kv_cache.hpp"
#include "sinkwatch/metrics.hpp"

namespace sinkwatch {

struct SimConfig {
    int heads = 12;
    int head_dim = 44;
    int window = 12;
    int sink_count = 3;
    int chunk = 3;
    int frames = 1024;
    double content_drift = 0.05;
    JitterConfig jitter{.sigma = 0.0};
    double collapse_mass_threshold = 2.0; // tau, multiple of the uniform sink share
    double collapse_head_fraction = 0.75; // rho
    std::uint64_t seed = 0;

    // Mechanism constants of the content model.
    double logit_gain = 12.0;    // logit = gain * sum_i A_i cos(...)
    double sink_salience = 0.8;  // sink keys are scaled by (1 + salience)
    double motion_noise = 0.3;
    int value_dim = 8;           // per head
    int train_len = 132;
    double content_base = 10000.0; // spectrum the content amplitudes were "trained" on
    bool record_snapshots = true;

    // Replaces the jitter-derived spectra (extension baselines, single-dim edits).
    std::optional<HeadSpectra> spectra_override;

    void validate() const;
};

struct AttentionSnapshot {
    std::int64_t frame_index = 0;
    std::vector<std::int64_t> cache_frames;
    std::vector<double> weights; // heads x cache_frames.size(), masked slots carry 0
    std::vector<double> sink_mass;
    double homogenization = 0.0;
    bool cache_full = false;
    bool collapse = false;

    [[nodiscard]] std::size_t slots() const { return cache_frames.size(); }
    [[nodiscard]] double weight(std::size_t h, std::size_t j) const { return weights[h * slots() + j]; }
};

struct AttendOptions {
    bool causal = true;     // mask cache entries whose frame exceeds the query position
    double tau = 2.0;
    double rho = 0.75;
};

struct AttendResult {
    AttentionSnapshot snapshot;
    std::vector<double> output; // heads x value_dim
};

// Scaled dot-product attention of one query frame (heads x head_dim) over the cache.
AttendResult attend(std::span<const double> query, std::int64_t position, const SinkKvCache& cache,
                    const HeadSpectra& spectra, const AttendOptions& options = {});

// Fraction of heads whose sink mass exceeds tau_mult * uniform_baseline.
double homogenization_metric(const AttentionSnapshot& snapshot, double uniform_baseline, double tau_mult);

// Per-pair content amplitudes A_i = min(1, L w_i / 2pi)^2, normalised to sum 1.
std::vector<double> content_amplitudes(const FrequencySpectrum& trained, int train_len);

struct SimResult {
    HeadSpectra spectra;
    FrameTrace trace; // features flattened per frame; sinks = frames 0..S-1
    std::vector<AttentionSnapshot> snapshots;
    std::vector<std::int64_t> events;
    std::vector<double> homogenization; // per frame, 0 for sink frames
};

HeadSpectra resolve_spectra(const SimConfig& config);
nlohmann::json to_json(const SimConfig& config);
SimResult run_generation(const SimConfig& config);

// CSV rows frame,head,sink_mass,homogenization,is_collapse.
void write_snapshot_csv(std::ostream& out, const SimResult& result);
// Plain-text heatmap: one line per (frame, head) "frame head w_0 ... w_{N-1}".
void write_heatmap(std::ostream& out, const SimResult& result);

} // namespace sinkwatch
