#include "sinkwatch/phase.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sinkwatch/error.hpp"

namespace sinkwatch {

namespace {

struct PhasorSum {
    double re = 0.0;
    double im = 0.0;
};

PhasorSum phasor_sum(const FrequencySpectrum& spec, std::int64_t delta)
{
    PhasorSum s;
    const double d = static_cast<double>(delta);
    for (double w : spec.freqs) {
        const double a = w * d;
        s.re += std::cos(a);
        s.im += std::sin(a);
    }
    return s;
}

double head_mean(std::span<const FrequencySpectrum> heads, std::int64_t delta)
{
    double acc = 0.0;
    for (const auto& h : heads) acc += coherence(h, delta);
    return acc / static_cast<double>(heads.size());
}

} // namespace

double coherence(const FrequencySpectrum& spec, std::int64_t delta)
{
    if (spec.freqs.empty() || delta == 0) return 1.0;
    const auto s = phasor_sum(spec, delta);
    return std::hypot(s.re, s.im) / static_cast<double>(spec.size());
}

double coherence_cosine(const FrequencySpectrum& spec, std::int64_t delta)
{
    if (spec.freqs.empty() || delta == 0) return 1.0;
    return phasor_sum(spec, delta).re / static_cast<double>(spec.size());
}

SinkConcentration sink_concentration(const FrequencySpectrum& spec, std::int64_t sink_index,
                                     std::int64_t frame_index)
{
    require(frame_index >= sink_index, "frame index " + std::to_string(frame_index) +
                                           " precedes sink index " + std::to_string(sink_index));
    return {sink_index, frame_index, coherence(spec, frame_index - sink_index)};
}

std::string_view sink_mode_name(SinkMode mode)
{
    switch (mode) {
    case SinkMode::Nearest: return "nearest";
    case SinkMode::First: return "first";
    case SinkMode::Max: return "max";
    case SinkMode::Mean: return "mean";
    }
    return "?";
}

SinkMode parse_sink_mode(std::string_view name)
{
    for (auto m : {SinkMode::Nearest, SinkMode::First, SinkMode::Max, SinkMode::Mean}) {
        if (sink_mode_name(m) == name) return m;
    }
    throw ValidationError("unknown sink mode '" + std::string(name) + "' (valid: nearest,first,max,mean)");
}

double multi_sink_concentration(const FrequencySpectrum& spec, int sink_count, std::int64_t frame_index,
                                SinkMode mode)
{
    require(sink_count >= 1, "sink count must be >= 1");
    require(frame_index >= sink_count - 1, "frame precedes the last sink frame");
    switch (mode) {
    case SinkMode::Nearest: return coherence(spec, frame_index - (sink_count - 1));
    case SinkMode::First: return coherence(spec, frame_index);
    case SinkMode::Max: {
        double best = 0.0;
        for (int s = 0; s < sink_count; ++s) best = std::max(best, coherence(spec, frame_index - s));
        return best;
    }
    case SinkMode::Mean: {
        double acc = 0.0;
        for (int s = 0; s < sink_count; ++s) acc += coherence(spec, frame_index - s);
        return acc / sink_count;
    }
    }
    return 0.0;
}

void profile_values_serial(std::span<const FrequencySpectrum> heads, std::int64_t first, std::span<double> out)
{
    require(!heads.empty(), "profile needs at least one head");
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = head_mean(heads, first + static_cast<std::int64_t>(i));
}

void profile_values_parallel(std::span<const FrequencySpectrum> heads, std::int64_t first, std::span<double> out)
{
    require(!heads.empty(), "profile needs at least one head");
    const auto n = static_cast<std::int64_t>(out.size());
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = head_mean(heads, first + i);
}

std::vector<ProfileMaximum> find_local_maxima(std::span<const double> values, double prominence_min)
{
    std::vector<ProfileMaximum> maxima;
    const std::size_t n = values.size();
    if (n < 3) return maxima;
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (!(values[i] > values[i - 1] && values[i] > values[i + 1])) continue;
        std::size_t l = i;
        while (l > 0 && values[l - 1] < values[l]) --l;
        std::size_t r = i;
        while (r + 1 < n && values[r + 1] < values[r]) ++r;
        const double prominence = values[i] - std::max(values[l], values[r]);
        if (prominence >= prominence_min) {
            maxima.push_back({static_cast<std::int64_t>(i), values[i], prominence});
        }
    }
    std::stable_sort(maxima.begin(), maxima.end(),
                     [](const ProfileMaximum& a, const ProfileMaximum& b) { return a.prominence > b.prominence; });
    return maxima;
}

CoherenceProfile coherence_profile(std::span<const FrequencySpectrum> heads, std::int64_t reference_frame,
                                   std::int64_t horizon, double prominence_min)
{
    require(horizon >= 1, "horizon must be >= 1");
    CoherenceProfile p;
    p.reference_frame = reference_frame;
    p.values.assign(static_cast<std::size_t>(horizon), 0.0);
    profile_values_parallel(heads, 0, p.values);
    p.maxima = find_local_maxima(p.values, prominence_min);
    return p;
}

CoherenceProfile predict_collapse_indices(const FrequencySpectrum& spec, std::int64_t sink_index,
                                          std::int64_t horizon, double prominence_min)
{
    return predict_collapse_indices(std::span<const FrequencySpectrum>(&spec, 1), sink_index, horizon,
                                    prominence_min);
}

CoherenceProfile predict_collapse_indices(std::span<const FrequencySpectrum> heads, std::int64_t sink_index,
                                          std::int64_t horizon, double prominence_min)
{
    require(horizon >= 2, "horizon must be >= 2");
    return coherence_profile(heads, sink_index, horizon, prominence_min);
}

CoherenceProfile multi_sink_profile(const FrequencySpectrum& spec, int sink_count, std::int64_t horizon,
                                    SinkMode mode, double prominence_min)
{
    return multi_sink_profile(std::span<const FrequencySpectrum>(&spec, 1), sink_count, horizon, mode,
                              prominence_min);
}

CoherenceProfile multi_sink_profile(std::span<const FrequencySpectrum> heads, int sink_count, std::int64_t horizon,
                                    SinkMode mode, double prominence_min)
{
    require(!heads.empty(), "profile needs at least one head");
    require(sink_count >= 1, "sink count must be >= 1");
    require(horizon >= 1, "horizon must be >= 1");
    CoherenceProfile p;
    p.reference_frame = sink_count - 1;
    p.values.resize(static_cast<std::size_t>(horizon));
    const auto n = horizon;
#pragma omp parallel for schedule(static)
    for (std::int64_t d = 0; d < n; ++d) {
        double acc = 0.0;
        for (const auto& h : heads) acc += multi_sink_concentration(h, sink_count, sink_count - 1 + d, mode);
        p.values[static_cast<std::size_t>(d)] = acc / static_cast<double>(heads.size());
    }
    p.maxima = find_local_maxima(p.values, prominence_min);
    return p;
}

} // namespace sinkwatch
