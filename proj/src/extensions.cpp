#include "sinkwatch/extensions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "sinkwatch/error.hpp"

namespace sinkwatch {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void require_valid(const FrequencySpectrum& spec)
{
    require(spec.dim >= 2 && spec.dim % 2 == 0 && spec.size() == static_cast<std::size_t>(spec.dim / 2),
            "malformed frequency spectrum");
}

} // namespace

void ExtensionParams::validate() const
{
    require(train_len > 0, "train_len must be positive");
    require(target_len > 0, "target_len must be positive");
    require(scale() >= 1.0, "target_len must be >= train_len (scale >= 1)");
}

FrequencySpectrum extend_pe(const FrequencySpectrum& spec)
{
    return spec;
}

FrequencySpectrum extend_pi(const FrequencySpectrum& spec, const ExtensionParams& params)
{
    require_valid(spec);
    params.validate();
    const double s = params.scale();
    auto out = spec;
    for (auto& w : out.freqs) w /= s;
    out.base = 0.0;
    return out;
}

FrequencySpectrum extend_ntk(const FrequencySpectrum& spec, const ExtensionParams& params)
{
    require_valid(spec);
    require(spec.dim >= 4, "NTK scaling needs rotary dim >= 4 (lambda = s*d/(d-2))");
    require(spec.canonical(), "NTK scaling needs a canonical spectrum with a known base");
    params.validate();
    const double d = spec.dim;
    const double lambda = params.scale() * d / (d - 2.0);
    return make_frequencies(lambda * spec.base, spec.dim);
}

FrequencySpectrum extend_yarn(const FrequencySpectrum& spec, const ExtensionParams& params)
{
    require_valid(spec);
    require(params.yarn_alpha < params.yarn_beta, "YaRN needs alpha < beta");
    params.validate();
    const double s = params.scale();
    auto out = spec;
    for (auto& w : out.freqs) {
        const double cycles = params.train_len * w / kTwoPi;
        const double gamma = std::clamp((cycles - params.yarn_alpha) / (params.yarn_beta - params.yarn_alpha), 0.0, 1.0);
        w = gamma * w + (1.0 - gamma) * w / s;
    }
    out.base = 0.0;
    return out;
}

int closest_period_component(const FrequencySpectrum& spec, double repetition)
{
    int best = -1;
    double best_gap = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < spec.size(); ++j) {
        if (spec.freqs[j] <= 0.0) continue;
        const double gap = std::abs(kTwoPi / spec.freqs[j] - repetition);
        if (gap < best_gap) {
            best_gap = gap;
            best = static_cast<int>(j);
        }
    }
    require(best >= 0, "spectrum has no positive frequency");
    return best;
}

FrequencySpectrum edit_single_frequency(const FrequencySpectrum& spec, int zero_based_index,
                                        const ExtensionParams& params)
{
    require_valid(spec);
    params.validate();
    require(zero_based_index >= 0 && static_cast<std::size_t>(zero_based_index) < spec.size(),
            "frequency index out of range");
    auto out = spec;
    out.freqs[static_cast<std::size_t>(zero_based_index)] = kTwoPi / (params.train_len * params.scale());
    out.base = 0.0;
    return out;
}

std::pair<FrequencySpectrum, RiflexReport> extend_riflex(const FrequencySpectrum& spec,
                                                         const ExtensionParams& params)
{
    require_valid(spec);
    params.validate();
    const int k = closest_period_component(spec, params.train_len);
    RiflexReport report;
    report.zero_based_index = k;
    report.component_index = k + 1;
    report.period = kTwoPi / spec.freqs[static_cast<std::size_t>(k)];
    report.new_freq = kTwoPi / (params.train_len * params.scale());
    return {edit_single_frequency(spec, k, params), report};
}

std::string_view method_name(ExtensionMethod m)
{
    switch (m) {
    case ExtensionMethod::PE: return "pe";
    case ExtensionMethod::PI: return "pi";
    case ExtensionMethod::NTK: return "ntk";
    case ExtensionMethod::YaRN: return "yarn";
    case ExtensionMethod::RIFLEx: return "riflex";
    case ExtensionMethod::LoL: return "lol";
    }
    return "?";
}

const std::vector<ExtensionMethod>& all_methods()
{
    static const std::vector<ExtensionMethod> methods = {ExtensionMethod::PE,   ExtensionMethod::PI,
                                                         ExtensionMethod::NTK,  ExtensionMethod::YaRN,
                                                         ExtensionMethod::RIFLEx, ExtensionMethod::LoL};
    return methods;
}

ExtensionMethod parse_method(std::string_view name)
{
    std::string valid;
    for (auto m : all_methods()) {
        if (method_name(m) == name) return m;
        if (!valid.empty()) valid += ",";
        valid += method_name(m);
    }
    throw ValidationError("unknown method '" + std::string(name) + "' (valid: " + valid + ")");
}

FrequencySpectrum apply_extension(ExtensionMethod m, const FrequencySpectrum& spec, const ExtensionParams& params)
{
    switch (m) {
    case ExtensionMethod::PE:
    case ExtensionMethod::LoL: return extend_pe(spec);
    case ExtensionMethod::PI: return extend_pi(spec, params);
    case ExtensionMethod::NTK: return extend_ntk(spec, params);
    case ExtensionMethod::YaRN: return extend_yarn(spec, params);
    case ExtensionMethod::RIFLEx: return extend_riflex(spec, params).first;
    }
    return spec;
}

RiflexCalibration calibrate_riflex(double base, double repetition, int target_index, double period_lo,
                                   double period_hi, double reference_period, int dim_lo, int dim_hi)
{
    RiflexCalibration cal;
    double best_gap = std::numeric_limits<double>::infinity();
    for (int dim = dim_lo + (dim_lo % 2); dim <= dim_hi; dim += 2) {
        const auto spec = make_frequencies(base, dim);
        const int j = closest_period_component(spec, repetition);
        const double period = kTwoPi / spec.freqs[static_cast<std::size_t>(j)];
        for (bool one_based : {false, true}) {
            RiflexCandidate c{dim, one_based, one_based ? j + 1 : j, period, false};
            c.matches = c.reported_index == target_index && period >= period_lo && period <= period_hi;
            cal.candidates.push_back(c);
            if (!c.matches) continue;
            cal.matches.push_back(c);
            const double gap = std::abs(period - reference_period);
            if (gap < best_gap) {
                best_gap = gap;
                cal.chosen = c;
                cal.found = true;
            }
        }
    }
    return cal;
}

} // namespace sinkwatch
