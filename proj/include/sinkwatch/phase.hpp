#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "sinkwatch/rope.hpp"

namespace sinkwatch {

// |(1/K) sum_i exp(j w_i delta)|. An empty spectrum has no positional term and
// is treated as perfectly coherent (1.0) at every displacement.
double coherence(const FrequencySpectrum& spec, std::int64_t delta);

// (1/K) sum_i cos(w_i delta), the real part of the same phasor mean.
double coherence_cosine(const FrequencySpectrum& spec, std::int64_t delta);

struct SinkConcentration {
    std::int64_t sink_index = 0;
    std::int64_t frame_index = 0;
    double value = 0.0;
};

SinkConcentration sink_concentration(const FrequencySpectrum& spec, std::int64_t sink_index,
                                     std::int64_t frame_index);

// How several sink frames 0..S-1 are folded into one concentration value.
enum class SinkMode {
    Nearest, // sink S-1, the positionally closest one
    First,   // sink 0
    Max,     // max over sinks
    Mean,    // mean over sinks
};

std::string_view sink_mode_name(SinkMode mode);
SinkMode parse_sink_mode(std::string_view name);

double multi_sink_concentration(const FrequencySpectrum& spec, int sink_count, std::int64_t frame_index,
                                SinkMode mode);

struct ProfileMaximum {
    std::int64_t delta = 0;
    double value = 0.0;
    double prominence = 0.0;
};

struct CoherenceProfile {
    std::int64_t reference_frame = 0; // frame at delta 0
    std::vector<double> values;       // values[d] for d = 0..horizon-1
    std::vector<ProfileMaximum> maxima;

    [[nodiscard]] std::int64_t horizon() const { return static_cast<std::int64_t>(values.size()); }
};

// Mean over heads of C_h(first + i), i = 0..count-1. Both kernels sum heads in
// the same order so their results are bitwise identical.
void profile_values_serial(std::span<const FrequencySpectrum> heads, std::int64_t first, std::span<double> out);
void profile_values_parallel(std::span<const FrequencySpectrum> heads, std::int64_t first, std::span<double> out);

// Strict interior local maxima, each with prominence = value minus the higher
// of the two valley floors reached by descending monotonically on either side.
// Sorted by prominence descending, then by delta.
std::vector<ProfileMaximum> find_local_maxima(std::span<const double> values, double prominence_min);

CoherenceProfile coherence_profile(std::span<const FrequencySpectrum> heads, std::int64_t reference_frame,
                                   std::int64_t horizon, double prominence_min);

CoherenceProfile predict_collapse_indices(const FrequencySpectrum& spec, std::int64_t sink_index,
                                          std::int64_t horizon, double prominence_min = 0.02);
CoherenceProfile predict_collapse_indices(std::span<const FrequencySpectrum> heads, std::int64_t sink_index,
                                          std::int64_t horizon, double prominence_min = 0.02);

// Profile of the multi-sink concentration, indexed by displacement from frame S-1.
CoherenceProfile multi_sink_profile(const FrequencySpectrum& spec, int sink_count, std::int64_t horizon,
                                    SinkMode mode, double prominence_min = 0.02);
// Same, averaged over heads.
CoherenceProfile multi_sink_profile(std::span<const FrequencySpectrum> heads, int sink_count, std::int64_t horizon,
                                    SinkMode mode, double prominence_min = 0.02);

} // namespace sinkwatch
