#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sinkwatch/rope.hpp"

namespace sinkwatch {

// Context-extension parameters. train_len defaults to the last frame index seen
// before the first collapse in the reference models.
struct ExtensionParams {
    int train_len = 132;
    int target_len = 1024;
    double yarn_alpha = 1.0;
    double yarn_beta = 32.0;

    [[nodiscard]] double scale() const { return static_cast<double>(target_len) / train_len; }
    void validate() const;
};

struct RiflexReport {
    int component_index = 0; // 1-based, as reported
    int zero_based_index = 0;
    double period = 0.0;     // intrinsic period 2*pi/omega_k before the update
    double new_freq = 0.0;   // 2*pi / (L * s)
};

FrequencySpectrum extend_pe(const FrequencySpectrum& spec);
FrequencySpectrum extend_pi(const FrequencySpectrum& spec, const ExtensionParams& params);
FrequencySpectrum extend_ntk(const FrequencySpectrum& spec, const ExtensionParams& params);
FrequencySpectrum extend_yarn(const FrequencySpectrum& spec, const ExtensionParams& params);
std::pair<FrequencySpectrum, RiflexReport> extend_riflex(const FrequencySpectrum& spec,
                                                         const ExtensionParams& params);

// Index of the component whose period 2*pi/omega is closest to `repetition`;
// ties resolve to the lowest index. Zero frequencies never win.
int closest_period_component(const FrequencySpectrum& spec, double repetition);

// Replaces one frequency (0-based) with the RIFLEx-style update 2*pi/(L*s).
FrequencySpectrum edit_single_frequency(const FrequencySpectrum& spec, int zero_based_index,
                                        const ExtensionParams& params);

enum class ExtensionMethod { PE, PI, NTK, YaRN, RIFLEx, LoL };

std::string_view method_name(ExtensionMethod m);
ExtensionMethod parse_method(std::string_view name); // throws ValidationError listing valid names
const std::vector<ExtensionMethod>& all_methods();

// LoL leaves the spectrum untouched here; its per-head perturbation lives in head_jitter.
FrequencySpectrum apply_extension(ExtensionMethod m, const FrequencySpectrum& spec, const ExtensionParams& params);

// Brute force over (rotary dim, index convention) pairs for the RIFLEx anchor.
struct RiflexCandidate {
    int dim = 0;
    bool one_based = false;
    int reported_index = 0;
    double period = 0.0;
    bool matches = false;
};

struct RiflexCalibration {
    std::vector<RiflexCandidate> candidates;
    std::vector<RiflexCandidate> matches;
    RiflexCandidate chosen; // match whose period is nearest reference_period
    bool found = false;
};

RiflexCalibration calibrate_riflex(double base, double repetition, int target_index, double period_lo,
                                   double period_hi, double reference_period, int dim_lo = 20, int dim_hi = 64);

} // namespace sinkwatch
