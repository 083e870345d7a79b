#include "sinkwatch/jitter.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sinkwatch/error.hpp"
#include "sinkwatch/rng.hpp"

namespace sinkwatch {

namespace {

constexpr std::uint64_t kSelectStream = 0x4a11;
constexpr std::uint64_t kEpsilonStream = 0x4a12;

} // namespace

void JitterConfig::validate() const
{
    require(std::isfinite(base) && base > 0.0, "jitter base must be positive");
    require(sigma >= 0.0 && sigma < 1.0, "sigma must lie in [0, 1) so every perturbed base stays positive");
    require(heads >= 1, "heads must be >= 1");
    require(head_dim >= 2 && head_dim % 2 == 0, "head_dim must be even and >= 2");
    require(jitter_ratio >= 0.0 && jitter_ratio <= 1.0, "jitter_ratio must lie in [0, 1]");
}

int JitterConfig::jittered_heads() const
{
    return static_cast<int>(std::lround(jitter_ratio * heads));
}

HeadSpectra HeadSpectra::shared(const FrequencySpectrum& spec, int heads)
{
    require(heads >= 1, "heads must be >= 1");
    HeadSpectra hs;
    hs.spectra.assign(static_cast<std::size_t>(heads), spec);
    hs.perturbations.assign(static_cast<std::size_t>(heads), 0.0);
    hs.config.base = spec.base > 0.0 ? spec.base : 1.0;
    hs.config.sigma = 0.0;
    hs.config.heads = heads;
    hs.config.head_dim = spec.dim;
    hs.config.jitter_ratio = 0.0;
    return hs;
}

HeadSpectra make_head_spectra_with_epsilons(const JitterConfig& config, std::span<const double> epsilons)
{
    config.validate();
    require(epsilons.size() == static_cast<std::size_t>(config.heads), "need one epsilon per head");
    HeadSpectra hs;
    hs.config = config;
    for (double e : epsilons) {
        require(std::abs(e) <= 1.0, "epsilon must lie in [-1, 1]");
        hs.perturbations.push_back(e);
        hs.spectra.push_back(make_frequencies(config.base * (1.0 + config.sigma * e), config.head_dim));
    }
    return hs;
}

HeadSpectra make_head_spectra(const JitterConfig& config)
{
    config.validate();
    std::vector<double> eps(static_cast<std::size_t>(config.heads), 0.0);
    if (config.sigma > 0.0) {
        CounterRng select(config.seed, kSelectStream);
        for (int h : sample_without_replacement(select, config.heads, config.jittered_heads())) {
            eps[static_cast<std::size_t>(h)] =
                2.0 * uniform_at(config.seed, kEpsilonStream, static_cast<std::uint64_t>(h)) - 1.0;
        }
    }
    return make_head_spectra_with_epsilons(config, eps);
}

std::pair<std::vector<double>, std::vector<double>> rotate_per_head(std::span<const double> q,
                                                                    std::span<const double> k, std::int64_t m,
                                                                    std::int64_t n, const HeadSpectra& spectra)
{
    const auto H = static_cast<std::size_t>(spectra.heads());
    const auto D = static_cast<std::size_t>(spectra.head_dim());
    require(q.size() == H * D && k.size() == H * D,
            "expected " + std::to_string(H) + "x" + std::to_string(D) + " query and key blocks");
    std::vector<double> qr(q.size()), kr(k.size());
    for (std::size_t h = 0; h < H; ++h) {
        rotate_into(q.subspan(h * D, D), m, spectra.spectra[h], std::span(qr).subspan(h * D, D));
        rotate_into(k.subspan(h * D, D), n, spectra.spectra[h], std::span(kr).subspan(h * D, D));
    }
    return {std::move(qr), std::move(kr)};
}

CoherenceSpread head_coherence_spread(const HeadSpectra& spectra, std::int64_t delta)
{
    require(spectra.heads() >= 1, "no heads");
    CoherenceSpread s;
    s.min = 1.0e300;
    s.max = -1.0e300;
    std::vector<double> c;
    for (const auto& spec : spectra.spectra) {
        const double v = coherence(spec, delta);
        c.push_back(v);
        s.mean += v;
        s.min = std::min(s.min, v);
        s.max = std::max(s.max, v);
    }
    s.mean /= static_cast<double>(c.size());
    double var = 0.0;
    for (double v : c) var += (v - s.mean) * (v - s.mean);
    s.stdev = std::sqrt(var / static_cast<double>(c.size()));
    return s;
}

CoherenceProfile predict_collapse_indices(const HeadSpectra& spectra, std::int64_t sink_index,
                                          std::int64_t horizon, double prominence_min)
{
    return predict_collapse_indices(std::span<const FrequencySpectrum>(spectra.spectra), sink_index, horizon,
                                    prominence_min);
}

nlohmann::json jitter_metadata(const HeadSpectra& spectra)
{
    return {
        {"seed", spectra.config.seed},
        {"sigma", spectra.config.sigma},
        {"jitter_ratio", spectra.config.jitter_ratio},
        {"epsilons", spectra.perturbations},
        {"rng_name", std::string(philox::kName)},
    };
}

} // namespace sinkwatch
