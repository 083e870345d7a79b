#include "sinkwatch/calibration.hpp"

#include <algorithm>
#include <cstdlib>
#include <limits>

#include "sinkwatch/jitter.hpp"

namespace sinkwatch {

std::int64_t nearest_maximum_gap(const CoherenceProfile& profile, std::int64_t anchor)
{
    std::int64_t best = std::numeric_limits<std::int64_t>::max();
    for (const auto& m : profile.maxima) best = std::min(best, std::abs(m.delta - anchor));
    return best;
}

std::int64_t AnchorSweepRow::worst() const
{
    return gaps.empty() ? 0 : *std::max_element(gaps.begin(), gaps.end());
}

std::vector<AnchorSweepRow> anchor_sweep(const CalibrationOptions& opt)
{
    std::vector<AnchorSweepRow> rows;
    for (int d = opt.dim_lo + (opt.dim_lo % 2); d <= opt.dim_hi; d += 2) {
        const auto profile = predict_collapse_indices(make_frequencies(opt.base, d), opt.sink_count - 1, opt.horizon,
                                                      opt.prominence_min);
        AnchorSweepRow row{d, {}};
        for (auto a : opt.anchors) row.gaps.push_back(nearest_maximum_gap(profile, a));
        rows.push_back(std::move(row));
    }
    return rows;
}

double JitterPilot::mean_reduction() const
{
    double acc = 0.0;
    for (double v : jittered) acc += 1.0 - v / baseline;
    return jittered.empty() ? 0.0 : acc / static_cast<double>(jittered.size());
}

int JitterPilot::seeds_below() const
{
    return static_cast<int>(std::count_if(jittered.begin(), jittered.end(), [&](double v) { return v < baseline; }));
}

JitterPilot jitter_pilot(const CalibrationOptions& opt)
{
    const auto base = make_frequencies(opt.base, opt.dim);
    const auto profile = predict_collapse_indices(base, opt.sink_count - 1, opt.horizon, opt.prominence_min);
    JitterPilot p;
    p.probe_delta = profile.maxima.empty() ? 0 : profile.maxima.front().delta;
    p.baseline = coherence(base, p.probe_delta);
    for (int s = 0; s < opt.pilot_seeds; ++s) {
        JitterConfig jc{opt.base, opt.sigma, opt.heads, opt.dim, 1.0, static_cast<std::uint64_t>(s)};
        p.jittered.push_back(head_coherence_spread(make_head_spectra(jc), p.probe_delta).mean);
    }
    return p;
}

nlohmann::json calibration_report(const CalibrationOptions& opt)
{
    nlohmann::json report;

    const auto riflex = calibrate_riflex(opt.base, opt.repetition, opt.target_index, opt.period_lo, opt.period_hi,
                                         opt.reference_period, opt.dim_lo, opt.dim_hi);
    auto cand = [](const RiflexCandidate& c) {
        return nlohmann::json{{"dim", c.dim}, {"one_based", c.one_based}, {"index", c.reported_index},
                              {"period", c.period}, {"matches", c.matches}};
    };
    nlohmann::json matches = nlohmann::json::array();
    for (const auto& c : riflex.matches) matches.push_back(cand(c));
    report["riflex"] = {
        {"repetition", opt.repetition},
        {"target_index", opt.target_index},
        {"period_window", {opt.period_lo, opt.period_hi}},
        {"reference_period", opt.reference_period},
        {"candidates_checked", riflex.candidates.size()},
        {"matches", matches},
        {"unique", riflex.matches.size() == 1},
        {"found", riflex.found},
        {"chosen", riflex.found ? cand(riflex.chosen) : nlohmann::json()},
    };

    const auto sweep = anchor_sweep(opt);
    nlohmann::json rows = nlohmann::json::array();
    const AnchorSweepRow* best = nullptr;
    const AnchorSweepRow* chosen = nullptr;
    for (const auto& r : sweep) {
        rows.push_back({{"dim", r.dim}, {"gaps", r.gaps}, {"covers_all", r.worst() <= opt.anchor_tolerance}});
        if (!best || r.worst() < best->worst()) best = &r;
        if (riflex.found && r.dim == riflex.chosen.dim) chosen = &r;
    }
    report["collapse_anchors"] = {
        {"anchors", opt.anchors},
        {"tolerance", opt.anchor_tolerance},
        {"horizon", opt.horizon},
        {"prominence_min", opt.prominence_min},
        {"sweep", rows},
        {"best_dim", best ? best->dim : 0},
        {"best_worst_gap", best ? best->worst() : 0},
        {"chosen_dim_covers_all", chosen && chosen->worst() <= opt.anchor_tolerance},
    };

    nlohmann::json modes = nlohmann::json::object();
    const auto spec = make_frequencies(opt.base, opt.dim);
    for (auto mode : {SinkMode::Nearest, SinkMode::First, SinkMode::Max, SinkMode::Mean}) {
        const auto prof = multi_sink_profile(spec, opt.sink_count, opt.horizon, mode, opt.prominence_min);
        std::vector<std::int64_t> gaps;
        for (auto a : opt.anchors) gaps.push_back(nearest_maximum_gap(prof, a));
        modes[std::string(sink_mode_name(mode))] = {{"maxima", prof.maxima.size()}, {"gaps", gaps}};
    }
    report["sink_modes"] = modes;

    const auto pilot = jitter_pilot(opt);
    report["jitter_pilot"] = {
        {"probe_delta", pilot.probe_delta},
        {"baseline", pilot.baseline},
        {"sigma", opt.sigma},
        {"heads", opt.heads},
        {"seeds", opt.pilot_seeds},
        {"jittered_mean", pilot.jittered},
        {"mean_reduction", pilot.mean_reduction()},
        {"seeds_below", pilot.seeds_below()},
        {"locked_threshold", kJitterReductionThreshold},
    };
    return report;
}

} // namespace sinkwatch
