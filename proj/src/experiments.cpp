#include "sinkwatch/experiments.hpp"

#include <algorithm>
#include <exception>
#include <string>

#include <omp.h>

#include "sinkwatch/error.hpp"

namespace sinkwatch {

namespace {

// Runs fn(i) for i in [0, n) across up to `jobs` threads; rethrows the first failure.
template <class Fn>
void parallel_cells(std::size_t n, int jobs, Fn&& fn)
{
    std::exception_ptr failure;
    const int threads = jobs > 0 ? jobs : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i) {
        try {
            fn(static_cast<std::size_t>(i));
        } catch (...) {
#pragma omp critical(sinkwatch_cell_failure)
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);
}

FrequencySpectrum base_spectrum(const SimConfig& cfg)
{
    return make_frequencies(cfg.jitter.base, cfg.head_dim);
}

} // namespace

CollapseParams default_collapse_params(int sink_count)
{
    CollapseParams p;
    p.warmup = sink_count + p.window;
    return p;
}

RunMetrics evaluate(const SimResult& result, std::uint64_t seed, const CollapseParams& params)
{
    RunMetrics m;
    m.seed = seed;
    m.events = result.events.size();
    m.first_event = result.events.empty() ? -1 : result.events.front();
    const auto& tr = result.trace;
    if (tr.distances.size() >= static_cast<std::size_t>(params.warmup + params.window)) {
        const auto drops = drop_series(tr.distances, params);
        m.max_drop = *std::max_element(drops.begin(), drops.end());
    }
    m.motion = motion_proxy(tr.features, tr.sink_features.size(), MotionStat::Median);
    return m;
}

std::vector<RunMetrics> run_seeds(const SimConfig& cfg, std::span<const std::uint64_t> seeds, int jobs)
{
    std::vector<RunMetrics> out(seeds.size());
    const auto params = default_collapse_params(cfg.sink_count);
    parallel_cells(seeds.size(), jobs, [&](std::size_t i) {
        SimConfig c = cfg;
        c.seed = seeds[i];
        c.record_snapshots = false;
        out[i] = evaluate(run_generation(c), seeds[i], params);
    });
    return out;
}

CorpusScore aggregate(std::vector<RunMetrics> prompts)
{
    require(!prompts.empty(), "empty corpus");
    CorpusScore s;
    for (const auto& p : prompts) {
        s.max_drop = std::max(s.max_drop, p.max_drop);
        s.avg_drop += p.max_drop;
        s.mean_events += static_cast<double>(p.events);
        s.motion += p.motion;
    }
    const auto n = static_cast<double>(prompts.size());
    s.avg_drop /= n;
    s.mean_events /= n;
    s.motion /= n;
    s.prompts = std::move(prompts);
    return s;
}

SimConfig configure_method(SimConfig base, ExtensionMethod method, const MethodSetup& setup)
{
    base.spectra_override.reset();
    if (method == ExtensionMethod::LoL) {
        base.jitter.sigma = setup.lol_sigma;
        base.jitter.jitter_ratio = setup.lol_ratio;
        return base;
    }
    base.jitter.sigma = 0.0;
    const auto spec = apply_extension(method, base_spectrum(base), setup.extension);
    base.spectra_override = HeadSpectra::shared(spec, base.heads);
    return base;
}

std::vector<MethodRow> compare_methods(const SimConfig& base, std::span<const ExtensionMethod> methods,
                                       const MethodSetup& setup, std::span<const std::uint64_t> seeds, int jobs)
{
    require(!methods.empty(), "no methods to compare");
    require(!seeds.empty(), "no seeds");
    std::vector<SimConfig> configs;
    for (auto m : methods) configs.push_back(configure_method(base, m, setup));

    const auto params = default_collapse_params(base.sink_count);
    std::vector<RunMetrics> cells(methods.size() * seeds.size());
    parallel_cells(cells.size(), jobs, [&](std::size_t i) {
        SimConfig c = configs[i / seeds.size()];
        c.seed = seeds[i % seeds.size()];
        c.record_snapshots = false;
        cells[i] = evaluate(run_generation(c), c.seed, params);
    });

    std::vector<MethodRow> rows;
    for (std::size_t mi = 0; mi < methods.size(); ++mi) {
        auto first = cells.begin() + static_cast<std::ptrdiff_t>(mi * seeds.size());
        rows.push_back({methods[mi], aggregate({first, first + static_cast<std::ptrdiff_t>(seeds.size())})});
    }
    return rows;
}

std::string_view sweep_kind_name(SweepKind kind)
{
    switch (kind) {
    case SweepKind::Sigma: return "sigma";
    case SweepKind::Ratio: return "ratio";
    case SweepKind::Base: return "base";
    case SweepKind::SingleDim: return "single-dim";
    }
    return "?";
}

SweepKind parse_sweep_kind(std::string_view name)
{
    for (auto k : {SweepKind::Sigma, SweepKind::Ratio, SweepKind::Base, SweepKind::SingleDim}) {
        if (sweep_kind_name(k) == name) return k;
    }
    throw ValidationError("unknown sweep '" + std::string(name) + "' (valid: sigma,ratio,base,single-dim)");
}

std::vector<SweepRow> run_sweep(const SimConfig& base, SweepKind kind, std::span<const double> grid,
                                std::span<const std::uint64_t> seeds, const MethodSetup& setup, int jobs)
{
    require(!grid.empty(), "empty sweep grid");
    require(!seeds.empty(), "no seeds");
    std::vector<SimConfig> configs;
    for (double v : grid) {
        SimConfig c = base;
        c.spectra_override.reset();
        switch (kind) {
        case SweepKind::Sigma:
            c.jitter.sigma = v;
            break;
        case SweepKind::Ratio:
            c.jitter.sigma = setup.lol_sigma;
            c.jitter.jitter_ratio = v;
            break;
        case SweepKind::Base:
            require(v > 0.0, "base grid values must be positive");
            c.jitter.base = v;
            break;
        case SweepKind::SingleDim: {
            const auto spec = base_spectrum(c);
            const auto j = static_cast<int>(v);
            require(static_cast<double>(j) == v, "single-dim grid values must be integer indices");
            c.jitter.sigma = 0.0;
            c.spectra_override = HeadSpectra::shared(edit_single_frequency(spec, j, setup.extension), c.heads);
            break;
        }
        }
        c.validate();
        configs.push_back(std::move(c));
    }

    const auto params = default_collapse_params(base.sink_count);
    std::vector<SweepRow> rows(grid.size() * seeds.size());
    parallel_cells(rows.size(), jobs, [&](std::size_t i) {
        SimConfig c = configs[i / seeds.size()];
        c.seed = seeds[i % seeds.size()];
        c.record_snapshots = false;
        rows[i] = {kind, grid[i / seeds.size()], evaluate(run_generation(c), c.seed, params)};
    });
    return rows;
}

std::vector<double> sweep_means(std::span<const SweepRow> rows, std::span<const double> grid)
{
    std::vector<double> means;
    for (double v : grid) {
        double acc = 0.0;
        int n = 0;
        for (const auto& r : rows) {
            if (r.value == v) {
                acc += r.metrics.max_drop;
                ++n;
            }
        }
        means.push_back(n ? acc / n : 0.0);
    }
    return means;
}

} // namespace sinkwatch
