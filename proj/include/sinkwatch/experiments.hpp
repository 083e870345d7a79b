#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sinkwatch/extensions.hpp"
#include "sinkwatch/metrics.hpp"
#include "sinkwatch/simulator.hpp"

namespace sinkwatch {

CollapseParams default_collapse_params(int sink_count);

struct RunMetrics {
    std::uint64_t seed = 0;
    double max_drop = 0.0;
    std::size_t events = 0;
    double motion = 0.0;
    std::int64_t first_event = -1;
};

RunMetrics evaluate(const SimResult& result, std::uint64_t seed, const CollapseParams& params);

// One corpus = one prompt per seed; Max/Avg aggregate per-prompt max drops.
struct CorpusScore {
    double max_drop = 0.0;
    double avg_drop = 0.0;
    double mean_events = 0.0;
    double motion = 0.0; // mean over prompts of the per-prompt median step
    std::vector<RunMetrics> prompts;
};

// Runs cfg once per seed, up to `jobs` concurrently (0 = OpenMP default).
std::vector<RunMetrics> run_seeds(const SimConfig& cfg, std::span<const std::uint64_t> seeds, int jobs = 0);
CorpusScore aggregate(std::vector<RunMetrics> prompts);

struct MethodSetup {
    ExtensionParams extension{};
    double lol_sigma = 0.8;
    double lol_ratio = 1.0;
};

SimConfig configure_method(SimConfig base, ExtensionMethod method, const MethodSetup& setup);

struct MethodRow {
    ExtensionMethod method = ExtensionMethod::PE;
    CorpusScore score;
};

std::vector<MethodRow> compare_methods(const SimConfig& base, std::span<const ExtensionMethod> methods,
                                       const MethodSetup& setup, std::span<const std::uint64_t> seeds, int jobs = 0);

enum class SweepKind { Sigma, Ratio, Base, SingleDim };

std::string_view sweep_kind_name(SweepKind kind);
SweepKind parse_sweep_kind(std::string_view name);

struct SweepRow {
    SweepKind kind = SweepKind::Sigma;
    double value = 0.0; // sigma, ratio, base, or 0-based edited index
    RunMetrics metrics;
};

// Every (grid value, seed) cell runs independently; rows come back grid-major.
std::vector<SweepRow> run_sweep(const SimConfig& base, SweepKind kind, std::span<const double> grid,
                                std::span<const std::uint64_t> seeds, const MethodSetup& setup, int jobs = 0);

// Mean max_drop per grid value, in grid order.
std::vector<double> sweep_means(std::span<const SweepRow> rows, std::span<const double> grid);

} // namespace sinkwatch
