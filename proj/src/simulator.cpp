#include "sinkwatch/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>

#include <fmt/format.h>

#include "sinkwatch/error.hpp"
#include "sinkwatch/rng.hpp"

namespace sinkwatch {

namespace {

enum Stream : std::uint64_t {
    kPhaseBase = 0x5101,
    kKeyPhase = 0x5102,
    kQueryPhase = 0x5103,
    kScene = 0x5104,
    kVelocity = 0x5105,
    kMotion = 0x5106,
};

} // namespace

void SimConfig::validate() const
{
    require(heads >= 1, "heads must be >= 1");
    require(head_dim >= 2 && head_dim % 2 == 0, "head_dim must be even and >= 2");
    require(sink_count >= 1, "sink count must be >= 1");
    require(window > sink_count, fmt::format("window ({}) must exceed sinks ({})", window, sink_count));
    require(chunk >= 1, "chunk must be >= 1");
    require(window - sink_count >= chunk, "window must hold the sinks plus one full chunk");
    require(frames >= 0, "frames must be >= 0");
    require(content_drift >= 0.0, "content_drift must be >= 0");
    require(collapse_mass_threshold > 0.0, "collapse mass threshold must be > 0");
    require(collapse_head_fraction > 0.0 && collapse_head_fraction <= 1.0, "collapse head fraction must lie in (0, 1]");
    require(value_dim >= 1, "value_dim must be >= 1");
    require(train_len >= 1, "train_len must be >= 1");
    if (spectra_override) {
        require(spectra_override->heads() == heads, "override spectra head count differs from heads");
        require(spectra_override->head_dim() == head_dim, "override spectra dim differs from head_dim");
    }
}

AttendResult attend(std::span<const double> query, std::int64_t position, const SinkKvCache& cache,
                    const HeadSpectra& spectra, const AttendOptions& options)
{
    require(!cache.empty(), "attend on an empty cache");
    const auto H = static_cast<std::size_t>(spectra.heads());
    const auto D = static_cast<std::size_t>(spectra.head_dim());
    require(query.size() == H * D, "query shape does not match the spectra");
    const std::size_t n = cache.size();
    const std::size_t Fv = cache.at(0).values.size() / H;

    AttendResult r;
    auto& snap = r.snapshot;
    snap.frame_index = position;
    snap.cache_frames = cache.frames();
    snap.weights.assign(H * n, 0.0);
    snap.sink_mass.assign(H, 0.0);
    snap.cache_full = cache.full();
    r.output.assign(H * Fv, 0.0);

    const double scale = 1.0 / std::sqrt(static_cast<double>(D));
    std::vector<double> qr(D), kr(D), logits(n);
    for (std::size_t h = 0; h < H; ++h) {
        const auto& spec = spectra.spectra[h];
        rotate_into(query.subspan(h * D, D), position, spec, qr);
        double peak = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < n; ++j) {
            const auto& e = cache.at(j);
            if (options.causal && e.frame > position) {
                logits[j] = -std::numeric_limits<double>::infinity();
                continue;
            }
            require(e.keys.size() == H * D, "cached key shape does not match the spectra");
            rotate_into(std::span(e.keys).subspan(h * D, D), e.frame, spec, kr);
            logits[j] = dot(qr, kr) * scale;
            peak = std::max(peak, logits[j]);
        }
        require(std::isfinite(peak), "query attends to no visible cache entry");
        double z = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double w = std::isinf(logits[j]) ? 0.0 : std::exp(logits[j] - peak);
            snap.weights[h * n + j] = w;
            z += w;
        }
        for (std::size_t j = 0; j < n; ++j) {
            const double w = snap.weights[h * n + j] /= z;
            if (cache.is_sink(j)) snap.sink_mass[h] += w;
            const auto& v = cache.at(j).values;
            for (std::size_t f = 0; f < Fv; ++f) r.output[h * Fv + f] += w * v[h * Fv + f];
        }
    }
    const double baseline = static_cast<double>(cache.sink_count()) / static_cast<double>(n);
    snap.homogenization = homogenization_metric(snap, baseline, options.tau);
    snap.collapse = snap.cache_full && snap.homogenization >= options.rho;
    return r;
}

double homogenization_metric(const AttentionSnapshot& snapshot, double uniform_baseline, double tau_mult)
{
    if (snapshot.sink_mass.empty()) return 0.0;
    const double threshold = tau_mult * uniform_baseline;
    std::size_t above = 0;
    for (double m : snapshot.sink_mass) above += m > threshold ? 1 : 0;
    return static_cast<double>(above) / static_cast<double>(snapshot.sink_mass.size());
}

std::vector<double> content_amplitudes(const FrequencySpectrum& trained, int train_len)
{
    std::vector<double> a(trained.size());
    double total = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double cycles = train_len * trained.freqs[i] / (2.0 * std::numbers::pi);
        a[i] = std::pow(std::min(1.0, cycles), 2.0);
        total += a[i];
    }
    require(total > 0.0, "content amplitudes vanish");
    for (auto& v : a) v /= total;
    return a;
}

HeadSpectra resolve_spectra(const SimConfig& config)
{
    if (config.spectra_override) return *config.spectra_override;
    auto jc = config.jitter;
    jc.heads = config.heads;
    jc.head_dim = config.head_dim;
    jc.seed = config.seed;
    return make_head_spectra(jc);
}

nlohmann::json to_json(const SimConfig& c)
{
    nlohmann::json j = {
        {"heads", c.heads},
        {"head_dim", c.head_dim},
        {"window", c.window},
        {"sinks", c.sink_count},
        {"chunk", c.chunk},
        {"frames", c.frames},
        {"content_drift", c.content_drift},
        {"base", c.jitter.base},
        {"sigma", c.jitter.sigma},
        {"jitter_ratio", c.jitter.jitter_ratio},
        {"tau", c.collapse_mass_threshold},
        {"rho", c.collapse_head_fraction},
        {"seed", c.seed},
        {"logit_gain", c.logit_gain},
        {"sink_salience", c.sink_salience},
        {"motion_noise", c.motion_noise},
        {"value_dim", c.value_dim},
        {"train_len", c.train_len},
        {"content_base", c.content_base},
    };
    if (c.spectra_override) {
        std::vector<std::vector<double>> freqs;
        for (const auto& s : c.spectra_override->spectra) freqs.push_back(s.freqs);
        j["spectra_override"] = freqs;
    }
    return j;
}

namespace {

// Synthetic content: per-head scene phases plus fresh, non-cumulative drift.
class ContentModel {
public:
    ContentModel(const SimConfig& c)
        : cfg_(c), H_(static_cast<std::size_t>(c.heads)), K_(static_cast<std::size_t>(c.head_dim / 2))
    {
        const auto amps = content_amplitudes(make_frequencies(c.content_base, c.head_dim), c.train_len);
        const double gain = std::sqrt(c.logit_gain * std::sqrt(static_cast<double>(c.head_dim)));
        amp_.resize(K_);
        for (std::size_t i = 0; i < K_; ++i) amp_[i] = std::sqrt(amps[i]) * gain;
        phi0_.resize(H_ * K_);
        for (std::size_t i = 0; i < phi0_.size(); ++i) {
            phi0_[i] = -std::numbers::pi + 2.0 * std::numbers::pi * uniform_at(c.seed, kPhaseBase, i);
        }
    }

    std::vector<double> vector_at(Stream stream, std::int64_t frame, double gain) const
    {
        std::vector<double> v(H_ * K_ * 2);
        const auto base = static_cast<std::uint64_t>(frame) * H_ * K_;
        for (std::size_t p = 0; p < H_ * K_; ++p) {
            const double phi = phi0_[p] + cfg_.content_drift * normal_at(cfg_.seed, stream, base + p);
            const double a = amp_[p % K_] * gain;
            v[2 * p] = a * std::cos(phi);
            v[2 * p + 1] = a * std::sin(phi);
        }
        return v;
    }

private:
    const SimConfig& cfg_;
    std::size_t H_, K_;
    std::vector<double> amp_, phi0_;
};

} // namespace

SimResult run_generation(const SimConfig& config)
{
    config.validate();
    SimResult result;
    result.spectra = resolve_spectra(config);

    const auto T = static_cast<std::size_t>(config.frames);
    const auto S = static_cast<std::size_t>(config.sink_count);
    const auto H = static_cast<std::size_t>(config.heads);
    const auto Fv = static_cast<std::size_t>(config.value_dim);
    const std::size_t F = H * Fv;
    const std::uint64_t seed = config.seed;

    if (T == 0) return result;

    ContentModel content(config);
    AttendOptions opts{true, config.collapse_mass_threshold, config.collapse_head_fraction};

    Feature x0(F), velocity(F);
    double vnorm = 0.0;
    for (std::size_t i = 0; i < F; ++i) {
        x0[i] = normal_at(seed, kScene, i);
        velocity[i] = normal_at(seed, kVelocity, i);
        vnorm += velocity[i] * velocity[i];
    }
    vnorm = std::sqrt(vnorm);
    for (auto& v : velocity) v /= vnorm;
    const double motion_scale = config.motion_noise / std::sqrt(static_cast<double>(F));

    std::vector<Feature> feats(T);
    result.homogenization.assign(T, 0.0);
    SinkKvCache cache(config.sink_count, config.window);
    const double sink_gain = 1.0 + config.sink_salience;

    for (std::size_t g = 0; g < std::min(S, T); ++g) {
        feats[g] = x0;
        cache.push({static_cast<std::int64_t>(g), content.vector_at(kKeyPhase, static_cast<std::int64_t>(g), sink_gain),
                    x0});
    }

    for (std::size_t g = S; g < T; g += static_cast<std::size_t>(config.chunk)) {
        const std::size_t end = std::min(g + static_cast<std::size_t>(config.chunk), T);
        for (std::size_t c = g; c < end; ++c) {
            Feature f(F);
            for (std::size_t i = 0; i < F; ++i) {
                f[i] = feats[c - 1][i] + velocity[i] +
                       motion_scale * normal_at(seed, kMotion, static_cast<std::uint64_t>(c) * F + i);
            }
            feats[c] = f;
            cache.push({static_cast<std::int64_t>(c), content.vector_at(kKeyPhase, static_cast<std::int64_t>(c), 1.0),
                        std::move(f)});
        }
        std::vector<Feature> outputs;
        for (std::size_t m = g; m < end; ++m) {
            const auto q = content.vector_at(kQueryPhase, static_cast<std::int64_t>(m), 1.0);
            auto r = attend(q, static_cast<std::int64_t>(m), cache, result.spectra, opts);
            result.homogenization[m] = r.snapshot.homogenization;
            if (r.snapshot.collapse) result.events.push_back(static_cast<std::int64_t>(m));
            if (config.record_snapshots) result.snapshots.push_back(std::move(r.snapshot));
            outputs.push_back(std::move(r.output));
        }
        for (std::size_t m = g; m < end; ++m) {
            feats[m] = outputs[m - g];
            cache.find(static_cast<std::int64_t>(m))->values = feats[m];
        }
    }

    std::vector<Feature> sinks(feats.begin(), feats.begin() + static_cast<std::ptrdiff_t>(std::min(S, T)));
    result.trace = distance_trace(std::move(feats), std::move(sinks));
    return result;
}

void write_snapshot_csv(std::ostream& out, const SimResult& result)
{
    out << "frame,head,sink_mass,homogenization,is_collapse\n";
    for (const auto& s : result.snapshots) {
        for (std::size_t h = 0; h < s.sink_mass.size(); ++h) {
            out << fmt::format("{},{},{:.10g},{:.6g},{}\n", s.frame_index, h, s.sink_mass[h], s.homogenization,
                               s.collapse ? 1 : 0);
        }
    }
}

void write_heatmap(std::ostream& out, const SimResult& result)
{
    const std::size_t width =
        result.snapshots.empty()
            ? 0
            : std::max_element(result.snapshots.begin(), result.snapshots.end(), [](const auto& a, const auto& b) {
                  return a.slots() < b.slots();
              })->slots();
    out << fmt::format("# heatmap rows={} slots={} layout=frame,head,weights(cache order, sinks first, 0-padded)\n",
                       result.snapshots.empty() ? 0 : result.snapshots.size() * result.snapshots.front().sink_mass.size(),
                       width);
    for (const auto& s : result.snapshots) {
        for (std::size_t h = 0; h < s.sink_mass.size(); ++h) {
            out << s.frame_index << ' ' << h;
            for (std::size_t j = 0; j < width; ++j) out << ' ' << fmt::format("{:.6g}", j < s.slots() ? s.weight(h, j) : 0.0);
            out << '\n';
        }
    }
}

} // namespace sinkwatch
