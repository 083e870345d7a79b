// sinkwatch: command-line front end for the sink-collapse laboratory.

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <omp.h>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "json_config.hpp"
#include "sinkwatch/calibration.hpp"
#include "sinkwatch/error.hpp"
#include "sinkwatch/experiments.hpp"
#include "sinkwatch/manifest.hpp"
#include "sinkwatch/phase.hpp"
#include "sinkwatch/streaming.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace sinkwatch;

namespace {

struct SimOptions {
    int heads = 12;
    int head_dim = 44;
    int window = 12;
    int sinks = 3;
    int chunk = 3;
    int frames = 1024;
    double sigma = 0.0;
    double jitter_ratio = 1.0;
    double base = 10000.0;
    double content_drift = 0.05;
    double tau = 2.0;
    double rho = 0.75;
    std::uint64_t seed = 0;
    int seeds = 1;
    int jobs = 0;
    std::string out_dir = "sinkwatch-out";
};

void add_sim_options(CLI::App* app, SimOptions& o)
{
    app->add_option("--heads", o.heads, "Attention heads")->capture_default_str();
    app->add_option("--head-dim", o.head_dim, "Temporal rotary channels per head")->capture_default_str();
    app->add_option("--window", o.window, "KV cache capacity in latent frames, sinks included")->capture_default_str();
    app->add_option("--sinks", o.sinks, "Sink frames kept at the head of the cache")->capture_default_str();
    app->add_option("--chunk", o.chunk, "Frames generated per autoregressive step")->capture_default_str();
    app->add_option("--frames", o.frames, "Frames to generate")->capture_default_str();
    app->add_option("--sigma", o.sigma, "Head jitter scale")->capture_default_str();
    app->add_option("--jitter-ratio", o.jitter_ratio, "Fraction of heads jittered")->capture_default_str();
    app->add_option("--base", o.base, "RoPE base")->capture_default_str();
    app->add_option("--content-drift", o.content_drift, "Per-step content phase noise")->capture_default_str();
    app->add_option("--tau", o.tau, "Sink-mass threshold as a multiple of the uniform share")->capture_default_str();
    app->add_option("--rho", o.rho, "Head fraction that flags a collapse event")->capture_default_str();
    app->add_option("--seed", o.seed, "First seed (SINKWATCH_SEED overrides unless given here)")->capture_default_str();
    app->add_option("--seeds", o.seeds, "Number of consecutive seeds")->capture_default_str();
    app->add_option("--jobs", o.jobs, "Concurrent runs (0 = OpenMP default)")->capture_default_str();
    app->add_option("--out-dir", o.out_dir, "Output directory")->capture_default_str();
}

SimConfig to_sim_config(const SimOptions& o)
{
    SimConfig c;
    c.heads = o.heads;
    c.head_dim = o.head_dim;
    c.window = o.window;
    c.sink_count = o.sinks;
    c.chunk = o.chunk;
    c.frames = o.frames;
    c.content_drift = o.content_drift;
    c.jitter.base = o.base;
    c.jitter.sigma = o.sigma;
    c.jitter.jitter_ratio = o.jitter_ratio;
    c.collapse_mass_threshold = o.tau;
    c.collapse_head_fraction = o.rho;
    c.seed = o.seed;
    c.validate();
    auto jc = c.jitter;
    jc.heads = c.heads;
    jc.head_dim = c.head_dim;
    jc.validate();
    return c;
}

std::vector<std::uint64_t> seed_list(const SimOptions& o)
{
    require(o.seeds >= 1, "--seeds must be >= 1");
    std::vector<std::uint64_t> s;
    for (int i = 0; i < o.seeds; ++i) s.push_back(o.seed + static_cast<std::uint64_t>(i));
    return s;
}

// Applies SINKWATCH_SEED unless --seed was given on the command line itself.
void apply_seed_env(CLI::App* app, std::uint64_t& seed, bool seed_on_command_line)
{
    const char* env = std::getenv("SINKWATCH_SEED");
    if (!env || seed_on_command_line || !app->get_option_no_throw("--seed")) return;
    try {
        std::size_t used = 0;
        seed = std::stoull(env, &used);
        require(used == std::string(env).size(), "");
    } catch (const std::exception&) {
        throw ValidationError(fmt::format("SINKWATCH_SEED='{}' is not an unsigned integer", env));
    }
}

class OutputSet {
public:
    OutputSet(RunManifest& manifest, fs::path dir) : manifest_(manifest), dir_(std::move(dir))
    {
        fs::create_directories(dir_);
    }

    fs::path declare(const std::string& name)
    {
        // Names are relative to the output directory so the hash does not depend on where a run is written.
        manifest_.outputs.push_back(name);
        return dir_ / name;
    }

    // Opens a CSV whose first line is the manifest comment. Declare every output first.
    std::ofstream csv(const fs::path& p) const
    {
        std::ofstream out(p);
        require(out.good(), "cannot write " + p.string());
        out << manifest_.csv_comment() << '\n';
        return out;
    }

    void write_manifest() const
    {
        auto m = manifest_;
        m.timestamp = utc_timestamp();
        auto j = m.to_json();
        j["hash"] = m.hash();
        std::ofstream(dir_ / "manifest.json") << j.dump(2) << '\n';
    }

private:
    RunManifest& manifest_;
    fs::path dir_;
};

void write_json(const fs::path& p, const json& j)
{
    std::ofstream out(p);
    require(out.good(), "cannot write " + p.string());
    out << j.dump(2) << '\n';
}

json metrics_json(const RunMetrics& m)
{
    return {{"seed", m.seed},
            {"max_drop", m.max_drop},
            {"events", m.events},
            {"first_event", m.first_event},
            {"motion", m.motion}};
}

// ---------------------------------------------------------------- analyze

struct AnalyzeOptions {
    double base = 10000.0;
    int dim = 44;
    int sink = 3;
    std::int64_t horizon = 1024;
    double prominence = 0.02;
    std::string sink_mode = "nearest";
    int heads = 1;
    double sigma = 0.0;
    std::uint64_t seed = 0;
    std::string out = "sinkwatch-out";
};

int cmd_analyze(const AnalyzeOptions& o)
{
    require(o.horizon >= 1, "--horizon must be >= 1");
    require(o.prominence >= 0.0, "--prominence must be >= 0");
    const auto mode = parse_sink_mode(o.sink_mode);
    JitterConfig jc{o.base, o.sigma, o.heads, o.dim, 1.0, o.seed};
    const auto spectra = make_head_spectra(jc);
    const auto profile = multi_sink_profile(spectra.spectra, o.sink, o.horizon, mode, o.prominence);

    RunManifest manifest;
    manifest.subcommand = "analyze";
    manifest.config = {{"base", o.base}, {"dim", o.dim},        {"sink", o.sink},
                       {"horizon", o.horizon}, {"prominence", o.prominence}, {"sink_mode", o.sink_mode},
                       {"heads", o.heads}, {"sigma", o.sigma}};
    manifest.seeds = {o.seed};
    manifest.calibration = default_calibration();
    OutputSet outs(manifest, o.out);
    const auto csv_path = outs.declare("coherence.csv");
    const auto max_path = outs.declare("maxima.json");

    std::vector<double> prom(profile.values.size(), 0.0);
    std::vector<char> is_max(profile.values.size(), 0);
    for (const auto& m : profile.maxima) {
        prom[static_cast<std::size_t>(m.delta)] = m.prominence;
        is_max[static_cast<std::size_t>(m.delta)] = 1;
    }
    {
        auto out = outs.csv(csv_path);
        out << "delta,value,is_max,prominence\n";
        for (std::size_t d = 0; d < profile.values.size(); ++d) {
            out << fmt::format("{},{:.12g},{},{:.12g}\n", d, profile.values[d], int(is_max[d]), prom[d]);
        }
    }
    json maxima = json::array();
    for (const auto& m : profile.maxima) {
        maxima.push_back({{"delta", m.delta},
                          {"frame", m.delta + profile.reference_frame},
                          {"value", m.value},
                          {"prominence", m.prominence}});
    }
    write_json(max_path, {{"reference_frame", profile.reference_frame},
                          {"sink_mode", o.sink_mode},
                          {"horizon", o.horizon},
                          {"prominence_min", o.prominence},
                          {"maxima", maxima},
                          {"jitter", jitter_metadata(spectra)},
                          {"manifest", manifest.hash()}});
    outs.write_manifest();

    fmt::print("{} maxima over {} displacements (reference frame {})\n", profile.maxima.size(), o.horizon,
               profile.reference_frame);
    for (std::size_t i = 0; i < std::min<std::size_t>(10, profile.maxima.size()); ++i) {
        const auto& m = profile.maxima[i];
        fmt::print("  delta {:5}  value {:.4f}  prominence {:.4f}\n", m.delta, m.value, m.prominence);
    }
    return 0;
}

// ---------------------------------------------------------------- simulate

struct ExtensionOptions {
    std::string method = "pe";
    int train_len = 132;
    int target_len = 0; // 0 = --frames
    double lol_sigma = 0.8;
};

void add_extension_options(CLI::App* app, ExtensionOptions& e, bool with_method)
{
    if (with_method) {
        app->add_option("--method", e.method, "Positional extension: pe,pi,ntk,yarn,riflex,lol")->capture_default_str();
    }
    app->add_option("--train-len", e.train_len, "Training length L")->capture_default_str();
    app->add_option("--target-len", e.target_len, "Target length L' (0 = --frames)")->capture_default_str();
    app->add_option("--lol-sigma", e.lol_sigma, "Jitter scale used by the lol method and the ratio sweep")
        ->capture_default_str();
}

MethodSetup to_setup(const ExtensionOptions& e, const SimOptions& o)
{
    MethodSetup s;
    s.extension.train_len = e.train_len;
    s.extension.target_len = e.target_len > 0 ? e.target_len : std::max(o.frames, e.train_len);
    s.lol_sigma = e.lol_sigma;
    s.lol_ratio = o.jitter_ratio;
    return s;
}

int cmd_simulate(const SimOptions& o, const ExtensionOptions& e)
{
    auto base = to_sim_config(o);
    const auto method = parse_method(e.method);
    if (method != ExtensionMethod::PE) base = configure_method(base, method, to_setup(e, o));
    const auto seeds = seed_list(o);

    std::vector<SimResult> results(seeds.size());
    std::exception_ptr failure;
    const int threads = o.jobs > 0 ? o.jobs : 0;
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads > 0 ? threads : omp_get_max_threads())
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(seeds.size()); ++i) {
        try {
            auto c = base;
            c.seed = seeds[static_cast<std::size_t>(i)];
            results[static_cast<std::size_t>(i)] = run_generation(c);
        } catch (...) {
#pragma omp critical(sinkwatch_simulate_failure)
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);

    RunManifest manifest;
    manifest.subcommand = "simulate";
    manifest.config = to_json(base);
    manifest.config["method"] = e.method;
    manifest.seeds = seeds;
    manifest.calibration = default_calibration();
    OutputSet outs(manifest, o.out_dir);
    struct Paths {
        fs::path trace, snaps, heat, feats;
    };
    std::vector<Paths> paths;
    for (auto s : seeds) {
        paths.push_back({outs.declare(fmt::format("trace_s{}.csv", s)), outs.declare(fmt::format("snapshots_s{}.csv", s)),
                         outs.declare(fmt::format("heatmap_s{}.txt", s)), outs.declare(fmt::format("features_s{}.txt", s))});
    }
    const auto summary_path = outs.declare("summary.json");

    const auto params = default_collapse_params(base.sink_count);
    std::vector<RunMetrics> metrics;
    json per_seed = json::array();
    for (std::size_t i = 0; i < seeds.size(); ++i) {
        const auto& r = results[i];
        metrics.push_back(evaluate(r, seeds[i], params));
        std::vector<double> drops;
        if (r.trace.distances.size() >= static_cast<std::size_t>(params.warmup + params.window)) {
            drops = drop_series(r.trace.distances, params);
        }
        {
            auto out = outs.csv(paths[i].trace);
            out << "frame,distance,drop,homogenization,is_collapse\n";
            std::size_t ev = 0;
            for (std::size_t t = 0; t < r.trace.distances.size(); ++t) {
                const bool collapse = ev < r.events.size() && r.events[ev] == static_cast<std::int64_t>(t);
                if (collapse) ++ev;
                out << fmt::format("{},{:.10g},{:.10g},{:.6g},{}\n", t, r.trace.distances[t],
                                   drops.empty() ? 0.0 : drops[t], r.homogenization[t], collapse ? 1 : 0);
            }
        }
        {
            auto out = outs.csv(paths[i].snaps);
            write_snapshot_csv(out, r);
        }
        {
            std::ofstream out(paths[i].heat);
            out << manifest.csv_comment() << '\n';
            write_heatmap(out, r);
        }
        {
            std::ofstream out(paths[i].feats);
            if (!r.trace.sink_features.empty()) write_feature_file(out, {r.trace.sink_features, r.trace.features});
        }
        auto mj = metrics_json(metrics.back());
        mj["events_at"] = r.events;
        per_seed.push_back(mj);
    }
    const auto corpus = aggregate(metrics);
    write_json(summary_path, {{"sink_collapse_max", corpus.max_drop},
                              {"sink_collapse_avg", corpus.avg_drop},
                              {"mean_events", corpus.mean_events},
                              {"motion", corpus.motion},
                              {"collapse_metric", {{"window", params.window},
                                                   {"percentile", params.percentile},
                                                   {"warmup", params.warmup}}},
                              {"jitter", jitter_metadata(results.front().spectra)},
                              {"runs", per_seed},
                              {"manifest", manifest.hash()}});
    outs.write_manifest();
    fmt::print("seeds {}  Sink-Collapse Max {:.2f}  Avg {:.2f}  events/run {:.2f}  motion {:.4f}\n", seeds.size(),
               corpus.max_drop, corpus.avg_drop, corpus.mean_events, corpus.motion);
    return 0;
}

// ---------------------------------------------------------------- compare

int cmd_compare(const SimOptions& o, const ExtensionOptions& e, const std::vector<std::string>& method_names)
{
    require(!method_names.empty(), "--methods is empty");
    std::vector<ExtensionMethod> methods;
    for (const auto& n : method_names) methods.push_back(parse_method(n));
    const auto base = to_sim_config(o);
    const auto seeds = seed_list(o);
    const auto rows = compare_methods(base, methods, to_setup(e, o), seeds, o.jobs);

    RunManifest manifest;
    manifest.subcommand = "compare";
    manifest.config = to_json(base);
    manifest.config["methods"] = method_names;
    manifest.config["train_len"] = e.train_len;
    manifest.config["target_len"] = to_setup(e, o).extension.target_len;
    manifest.config["lol_sigma"] = e.lol_sigma;
    manifest.seeds = seeds;
    manifest.calibration = default_calibration();
    OutputSet outs(manifest, o.out_dir);
    const auto csv_path = outs.declare("compare.csv");
    {
        auto out = outs.csv(csv_path);
        out << "method,sink_collapse_max,sink_collapse_avg,events,motion\n";
        for (const auto& r : rows) {
            out << fmt::format("{},{:.6f},{:.6f},{:.4f},{:.6f}\n", method_name(r.method), r.score.max_drop,
                               r.score.avg_drop, r.score.mean_events, r.score.motion);
        }
    }
    outs.write_manifest();
    fmt::print("{:<8} {:>9} {:>9} {:>8} {:>8}\n", "method", "max", "avg", "events", "motion");
    for (const auto& r : rows) {
        fmt::print("{:<8} {:>9.2f} {:>9.2f} {:>8.2f} {:>8.4f}\n", method_name(r.method), r.score.max_drop,
                   r.score.avg_drop, r.score.mean_events, r.score.motion);
    }
    return 0;
}

// ---------------------------------------------------------------- sweep

struct SweepOptions {
    std::optional<std::vector<double>> sigma_grid, ratio_grid, base_grid, dim_grid;
    bool single_dim = false;
    int neighbors = 3;
};

int cmd_sweep(const SimOptions& o, const ExtensionOptions& e, const SweepOptions& s)
{
    const auto base = to_sim_config(o);
    const auto seeds = seed_list(o);
    const auto setup = to_setup(e, o);

    std::vector<std::pair<SweepKind, std::vector<double>>> grids;
    if (s.sigma_grid) grids.emplace_back(SweepKind::Sigma, *s.sigma_grid);
    if (s.ratio_grid) grids.emplace_back(SweepKind::Ratio, *s.ratio_grid);
    if (s.base_grid) grids.emplace_back(SweepKind::Base, *s.base_grid);
    if (s.dim_grid) {
        grids.emplace_back(SweepKind::SingleDim, *s.dim_grid);
    } else if (s.single_dim) {
        const int k = extend_riflex(make_frequencies(base.jitter.base, base.head_dim), setup.extension)
                          .second.zero_based_index;
        std::vector<double> g;
        for (int j = k - s.neighbors; j <= k + s.neighbors; ++j) {
            if (j >= 0 && j < base.head_dim / 2) g.push_back(j);
        }
        grids.emplace_back(SweepKind::SingleDim, g);
    }
    require(!grids.empty(), "no sweep grid given (use --sigma-grid, --ratio-grid, --base-grid, --dim-grid or --single-dim)");
    for (const auto& [kind, g] : grids) {
        require(!g.empty(), fmt::format("empty {} grid", sweep_kind_name(kind)));
    }

    std::vector<std::vector<SweepRow>> cells;
    for (const auto& [kind, g] : grids) cells.push_back(run_sweep(base, kind, g, seeds, setup, o.jobs));

    RunManifest manifest;
    manifest.subcommand = "sweep";
    manifest.config = to_json(base);
    for (const auto& [kind, g] : grids) manifest.config["grid_" + std::string(sweep_kind_name(kind))] = g;
    manifest.config["lol_sigma"] = e.lol_sigma;
    manifest.config["train_len"] = e.train_len;
    manifest.config["target_len"] = setup.extension.target_len;
    manifest.seeds = seeds;
    manifest.calibration = default_calibration();
    OutputSet outs(manifest, o.out_dir);
    const auto long_path = outs.declare("sweep.csv");
    const auto summary_path = outs.declare("sweep_summary.csv");
    {
        auto out = outs.csv(long_path);
        out << "kind,value,seed,max_drop,events,first_event,motion\n";
        for (const auto& rows : cells) {
            for (const auto& r : rows) {
                out << fmt::format("{},{:g},{},{:.6f},{},{},{:.6f}\n", sweep_kind_name(r.kind), r.value, r.metrics.seed,
                                   r.metrics.max_drop, r.metrics.events, r.metrics.first_event, r.metrics.motion);
            }
        }
    }
    {
        auto out = outs.csv(summary_path);
        out << "kind,value,mean_max_drop,min_events,mean_events\n";
        for (std::size_t gi = 0; gi < grids.size(); ++gi) {
            const auto& [kind, g] = grids[gi];
            const auto means = sweep_means(cells[gi], g);
            for (std::size_t i = 0; i < g.size(); ++i) {
                std::size_t min_ev = SIZE_MAX, total = 0, n = 0;
                for (const auto& r : cells[gi]) {
                    if (r.value != g[i]) continue;
                    min_ev = std::min(min_ev, r.metrics.events);
                    total += r.metrics.events;
                    ++n;
                }
                out << fmt::format("{},{:g},{:.6f},{},{:.4f}\n", sweep_kind_name(kind), g[i], means[i], min_ev,
                                   n ? double(total) / double(n) : 0.0);
                fmt::print("{:<10} {:>8g}  mean max_drop {:7.2f}  min events {}\n", sweep_kind_name(kind), g[i],
                           means[i], min_ev);
            }
        }
    }
    outs.write_manifest();
    return 0;
}

// ---------------------------------------------------------------- calibrate

int cmd_calibrate(CalibrationOptions opt, const std::string& out_dir)
{
    const auto report = calibration_report(opt);
    RunManifest manifest;
    manifest.subcommand = "calibrate";
    manifest.config = {{"base", opt.base}, {"repetition", opt.repetition}, {"target_index", opt.target_index},
                       {"horizon", opt.horizon}, {"anchors", opt.anchors}, {"tolerance", opt.anchor_tolerance},
                       {"pilot_seeds", opt.pilot_seeds}};
    manifest.calibration = default_calibration();
    OutputSet outs(manifest, out_dir);
    const auto path = outs.declare("calibration.json");
    auto j = report;
    j["manifest"] = manifest.hash();
    write_json(path, j);
    outs.write_manifest();

    const auto& rf = report["riflex"];
    fmt::print("riflex: {} matching configuration(s); chosen {}\n", rf["matches"].size(), rf["chosen"].dump());
    const auto& ca = report["collapse_anchors"];
    fmt::print("anchors: chosen dim covers all = {}; best dim {} (worst gap {})\n",
               ca["chosen_dim_covers_all"].get<bool>(), ca["best_dim"].get<int>(), ca["best_worst_gap"].get<long>());
    const auto& jp = report["jitter_pilot"];
    fmt::print("jitter pilot: delta {} mean reduction {:.3f}, {} / {} seeds below baseline (threshold {:.2f})\n",
               jp["probe_delta"].get<long>(), jp["mean_reduction"].get<double>(), jp["seeds_below"].get<int>(),
               jp["seeds"].get<int>(), kJitterReductionThreshold);
    return 0;
}

// ---------------------------------------------------------------- score

struct ScoreOptions {
    std::vector<std::string> features;
    int window = 32;
    double percentile = 90.0;
    int warmup = -1; // -1 = sinks + window
    std::string out;
};

int cmd_score(const ScoreOptions& o)
{
    require(!o.features.empty(), "no feature files given");
    std::vector<FrameTrace> traces;
    int sinks = 0;
    for (const auto& path : o.features) {
        auto file = read_feature_file(path);
        sinks = std::max(sinks, static_cast<int>(file.sinks.size()));
        traces.push_back(distance_trace(std::move(file.frames), std::move(file.sinks)));
    }
    CollapseParams params;
    params.window = o.window;
    params.percentile = o.percentile;
    params.warmup = o.warmup >= 0 ? o.warmup : sinks + o.window;
    require(params.warmup >= sinks, "--warmup must be >= the sink count");
    const auto score = collapse_scores(traces, params);

    if (!o.out.empty()) {
        RunManifest manifest;
        manifest.subcommand = "score";
        manifest.config = {{"features", o.features}, {"window", params.window}, {"percentile", params.percentile},
                           {"warmup", params.warmup}};
        manifest.calibration = default_calibration();
        OutputSet outs(manifest, fs::path(o.out).parent_path().empty() ? fs::path(".") : fs::path(o.out).parent_path());
        manifest.outputs.push_back(o.out);
        auto out = outs.csv(o.out);
        out << "file,max_drop\n";
        for (std::size_t i = 0; i < traces.size(); ++i) out << fmt::format("{},{:.6f}\n", o.features[i], score.trace_max_drop[i]);
        out << fmt::format("corpus_max,{:.6f}\ncorpus_avg,{:.6f}\n", score.max_drop, score.avg_drop);
    }
    for (std::size_t i = 0; i < traces.size(); ++i) fmt::print("{}: max_drop {:.4f}\n", o.features[i], score.trace_max_drop[i]);
    fmt::print("Sink-Collapse Max {:.4f}  Avg {:.4f}  (window {}, p{:g}, warmup {})\n", score.max_drop, score.avg_drop,
               params.window, params.percentile, params.warmup);
    return 0;
}

// ---------------------------------------------------------------- stream

struct StreamOptions {
    std::int64_t frames = 10000;
    int heads = 12;
    int head_dim = 44;
    int window = 12;
    int sinks = 3;
    std::size_t ring = 4;
    double sigma = 0.8;
    double base = 10000.0;
    std::uint64_t seed = 0;
    std::int64_t decimate = 100;
    std::string resume;
    std::string out_dir = "sinkwatch-out";
};

int cmd_stream(const StreamOptions& o)
{
    require(o.frames >= 0, "--frames must be >= 0");
    require(o.decimate >= 1, "--decimate must be >= 1");
    StreamConfig cfg;
    cfg.heads = o.heads;
    cfg.head_dim = o.head_dim;
    cfg.window = o.window;
    cfg.sink_count = o.sinks;
    cfg.ring_length = o.ring;
    cfg.jitter.base = o.base;
    cfg.jitter.sigma = o.sigma;
    cfg.seed = o.seed;

    std::optional<StreamRunner> runner;
    if (!o.resume.empty()) {
        std::ifstream in(o.resume);
        require(in.good(), "cannot open checkpoint " + o.resume);
        json ck;
        try {
            ck = json::parse(in);
        } catch (const json::parse_error& e) {
            throw ValidationError(std::string("malformed checkpoint: ") + e.what());
        }
        runner.emplace(StreamRunner::resume(cfg, ck));
    } else {
        runner.emplace(cfg);
    }

    RunManifest manifest;
    manifest.subcommand = "stream";
    manifest.config = {{"frames", o.frames}, {"heads", o.heads}, {"head_dim", o.head_dim}, {"window", o.window},
                       {"sinks", o.sinks},   {"ring", o.ring},   {"sigma", o.sigma},       {"base", o.base},
                       {"decimate", o.decimate}, {"resume", o.resume}};
    manifest.seeds = {runner->state().seed};
    manifest.calibration = default_calibration();
    OutputSet outs(manifest, o.out_dir);
    const auto csv_path = outs.declare("stream.csv");
    const auto ck_path = outs.declare("checkpoint.json");
    const auto summary_path = outs.declare("stream_summary.json");

    auto out = outs.csv(csv_path);
    out << "frame,homogenization,is_collapse,distance,drop\n";
    double max_drop = 0.0;
    for (std::int64_t i = 0; i < o.frames; ++i) {
        const auto s = runner->step();
        max_drop = std::max(max_drop, s.drop);
        if (s.frame % o.decimate == 0 || s.collapse) {
            out << fmt::format("{},{:.6g},{},{:.10g},{:.10g}\n", s.frame, s.homogenization, s.collapse ? 1 : 0,
                               s.distance, s.drop);
        }
    }
    write_json(ck_path, runner->checkpoint());
    write_json(summary_path, {{"frames", o.frames},
                              {"events", runner->events()},
                              {"max_drop_raw", max_drop},
                              {"checkpoint", runner->checkpoint()},
                              {"jitter", jitter_metadata(runner->spectra())},
                              {"manifest", manifest.hash()}});
    outs.write_manifest();
    fmt::print("streamed {} frames, next position {}, {} collapse events\n", o.frames, runner->state().next_position,
               runner->events());
    return 0;
}

void emit_error(const std::string& kind, const std::string& message)
{
    std::cerr << "error: kind=" << kind << " message=" << json(message).dump() << '\n';
}

std::string active_subcommand(int argc, char** argv, const std::vector<std::string>& names)
{
    for (int i = 1; i < argc; ++i) {
        for (const auto& n : names) {
            if (n == argv[i]) return n;
        }
    }
    return {};
}

} // namespace

int main(int argc, char** argv)
{
    const std::vector<std::string> names = {"analyze", "simulate", "compare", "sweep", "calibrate", "score", "stream"};
    CLI::App app{"sinkwatch: RoPE phase-coherence and sink-collapse laboratory"};
    app.set_version_flag("--version", SINKWATCH_VERSION);
    app.require_subcommand(1);
    app.fallthrough();
    app.config_formatter(std::make_shared<cli::JsonConfig>(active_subcommand(argc, argv, names)));
    app.set_config("--config", "", "JSON file of option values; command-line flags take precedence");

    AnalyzeOptions ao;
    auto* analyze = app.add_subcommand("analyze", "Coherence profile and predicted collapse indices");
    analyze->add_option("--base", ao.base, "RoPE base")->capture_default_str();
    analyze->add_option("--dim", ao.dim, "Temporal rotary channels")->capture_default_str();
    analyze->add_option("--sink", ao.sink, "Sink frame count; displacements are taken from frame sink-1")
        ->capture_default_str();
    analyze->add_option("--horizon", ao.horizon, "Number of displacements sampled")->capture_default_str();
    analyze->add_option("--prominence", ao.prominence, "Minimum peak prominence")->capture_default_str();
    analyze->add_option("--sink-mode", ao.sink_mode, "nearest, first, max or mean")->capture_default_str();
    analyze->add_option("--heads", ao.heads, "Heads averaged in the profile")->capture_default_str();
    analyze->add_option("--sigma", ao.sigma, "Head jitter scale")->capture_default_str();
    analyze->add_option("--seed", ao.seed, "Jitter seed")->capture_default_str();
    analyze->add_option("--out", ao.out, "Output directory")->capture_default_str();

    SimOptions so;
    ExtensionOptions eo;
    auto* simulate = app.add_subcommand("simulate", "Run the sink-cache attention simulator");
    add_sim_options(simulate, so);
    add_extension_options(simulate, eo, true);

    std::vector<std::string> methods = {"pe", "pi", "ntk", "yarn", "riflex", "lol"};
    auto* compare = app.add_subcommand("compare", "Score every positional extension on paired seeds");
    add_sim_options(compare, so);
    add_extension_options(compare, eo, false);
    compare->add_option("--methods", methods, "Comma-separated methods")->delimiter(',')->capture_default_str();

    SweepOptions sw;
    auto* sweep = app.add_subcommand("sweep", "Ablation grids");
    add_sim_options(sweep, so);
    add_extension_options(sweep, eo, false);
    sweep->add_option("--sigma-grid", sw.sigma_grid, "Jitter scales")->delimiter(',');
    sweep->add_option("--ratio-grid", sw.ratio_grid, "Jittered-head fractions")->delimiter(',');
    sweep->add_option("--base-grid", sw.base_grid, "RoPE bases")->delimiter(',');
    sweep->add_option("--dim-grid", sw.dim_grid, "0-based frequency indices edited one at a time")->delimiter(',');
    sweep->add_flag("--single-dim", sw.single_dim, "Edit the RIFLEx index and its neighbours one at a time");
    sweep->add_option("--neighbors", sw.neighbors, "Neighbours on each side for --single-dim")->capture_default_str();

    CalibrationOptions co;
    std::string calib_out = "sinkwatch-out";
    auto* calibrate = app.add_subcommand("calibrate", "RIFLEx anchor, collapse anchors and jitter pilot report");
    calibrate->add_option("--base", co.base, "RoPE base")->capture_default_str();
    calibrate->add_option("--repetition", co.repetition, "Observed repetition length")->capture_default_str();
    calibrate->add_option("--target-index", co.target_index, "Reported component index to reproduce")
        ->capture_default_str();
    calibrate->add_option("--horizon", co.horizon, "Displacements sampled")->capture_default_str();
    calibrate->add_option("--anchors", co.anchors, "Collapse indices to cover")->delimiter(',')->capture_default_str();
    calibrate->add_option("--tolerance", co.anchor_tolerance, "Allowed gap to a maximum")->capture_default_str();
    calibrate->add_option("--pilot-seeds", co.pilot_seeds, "Seeds in the jitter pilot")->capture_default_str();
    calibrate->add_option("--out", calib_out, "Output directory")->capture_default_str();

    ScoreOptions sc;
    auto* score = app.add_subcommand("score", "Sink-Collapse Max/Avg of external feature files");
    score->add_option("--features", sc.features, "Feature files (dim=<D> frames=<T> sinks=<S> format)")->required();
    score->add_option("--window", sc.window, "Trailing window")->capture_default_str();
    score->add_option("--percentile", sc.percentile, "Trailing percentile")->capture_default_str();
    score->add_option("--warmup", sc.warmup, "Warm-up frames (-1 = sinks + window)")->capture_default_str();
    score->add_option("--out", sc.out, "Optional CSV path");

    StreamOptions st;
    auto* stream = app.add_subcommand("stream", "Unbounded streaming rollout with constant memory");
    stream->add_option("--frames", st.frames, "Frames to stream")->capture_default_str();
    stream->add_option("--heads", st.heads)->capture_default_str();
    stream->add_option("--head-dim", st.head_dim)->capture_default_str();
    stream->add_option("--window", st.window)->capture_default_str();
    stream->add_option("--sinks", st.sinks)->capture_default_str();
    stream->add_option("--ring", st.ring, "Decode ring length")->capture_default_str();
    stream->add_option("--sigma", st.sigma)->capture_default_str();
    stream->add_option("--base", st.base)->capture_default_str();
    stream->add_option("--seed", st.seed)->capture_default_str();
    stream->add_option("--decimate", st.decimate, "Record every k-th frame")->capture_default_str();
    stream->add_option("--resume", st.resume, "Checkpoint JSON to resume from");
    stream->add_option("--out-dir", st.out_dir)->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        emit_error("usage", e.what());
        return 1;
    }

    auto seed_given = [&](CLI::App* sub) {
        // Only an explicit flag beats the environment; config-file values do not.
        for (int i = 1; i < argc; ++i) {
            const std::string a = argv[i];
            if (a == "--seed" || a.rfind("--seed=", 0) == 0) return true;
        }
        (void)sub;
        return false;
    };

    try {
        if (analyze->parsed()) {
            apply_seed_env(analyze, ao.seed, seed_given(analyze));
            return cmd_analyze(ao);
        }
        if (simulate->parsed()) {
            apply_seed_env(simulate, so.seed, seed_given(simulate));
            return cmd_simulate(so, eo);
        }
        if (compare->parsed()) {
            apply_seed_env(compare, so.seed, seed_given(compare));
            return cmd_compare(so, eo, methods);
        }
        if (sweep->parsed()) {
            apply_seed_env(sweep, so.seed, seed_given(sweep));
            return cmd_sweep(so, eo, sw);
        }
        if (calibrate->parsed()) return cmd_calibrate(co, calib_out);
        if (score->parsed()) return cmd_score(sc);
        if (stream->parsed()) {
            apply_seed_env(stream, st.seed, seed_given(stream) || !st.resume.empty());
            return cmd_stream(st);
        }
    } catch (const ValidationError& e) {
        emit_error("validation", e.what());
        return 1;
    } catch (const std::exception& e) {
        emit_error("runtime", e.what());
        return 2;
    }
    return 0;
}
