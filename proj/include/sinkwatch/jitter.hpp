#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include <json.hpp>

#include "sinkwatch/phase.hpp"
#include "sinkwatch/rope.hpp"

namespace sinkwatch {

struct JitterConfig {
    double base = 10000.0;
    double sigma = 0.8;
    int heads = 12;
    int head_dim = 44;
    double jitter_ratio = 1.0;
    std::uint64_t seed = 0;

    void validate() const;
    [[nodiscard]] int jittered_heads() const;
};

struct HeadSpectra {
    std::vector<FrequencySpectrum> spectra;
    std::vector<double> perturbations; // epsilon per head, 0 for untouched heads
    JitterConfig config;

    [[nodiscard]] int heads() const { return static_cast<int>(spectra.size()); }
    [[nodiscard]] int head_dim() const { return spectra.empty() ? 0 : spectra.front().dim; }

    // Every head shares `spec`; used for the non-jitter extension baselines.
    static HeadSpectra shared(const FrequencySpectrum& spec, int heads);

    friend bool operator==(const HeadSpectra& a, const HeadSpectra& b)
    {
        return a.spectra == b.spectra && a.perturbations == b.perturbations;
    }
};

HeadSpectra make_head_spectra(const JitterConfig& config);

// Test hook: builds spectra from explicit epsilons instead of drawing them.
HeadSpectra make_head_spectra_with_epsilons(const JitterConfig& config, std::span<const double> epsilons);

// q and k are H x D row-major; returns the per-head rotated pair.
std::pair<std::vector<double>, std::vector<double>> rotate_per_head(std::span<const double> q,
                                                                    std::span<const double> k, std::int64_t m,
                                                                    std::int64_t n, const HeadSpectra& spectra);

struct CoherenceSpread {
    double mean = 0.0;
    double min = 0.0;
    double max = 0.0;
    double stdev = 0.0; // population
};

CoherenceSpread head_coherence_spread(const HeadSpectra& spectra, std::int64_t delta);

CoherenceProfile predict_collapse_indices(const HeadSpectra& spectra, std::int64_t sink_index,
                                          std::int64_t horizon, double prominence_min = 0.02);

nlohmann::json jitter_metadata(const HeadSpectra& spectra);

} // namespace sinkwatch
