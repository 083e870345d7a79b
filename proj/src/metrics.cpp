#include "sinkwatch/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

#include "sinkwatch/error.hpp"

namespace sinkwatch {

namespace {

double l2(const Feature& a, const Feature& b)
{
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return std::sqrt(acc);
}

} // namespace

FrameTrace distance_trace(std::vector<Feature> features, std::vector<Feature> sink_features)
{
    require(!features.empty(), "empty trace");
    require(!sink_features.empty(), "need at least one sink feature");
    const std::size_t dim = sink_features.front().size();
    for (const auto& f : sink_features) require(f.size() == dim, "sink feature dimension mismatch");
    for (std::size_t t = 0; t < features.size(); ++t) {
        require(features[t].size() == dim, fmt::format("frame {} has dimension {}, expected {}", t,
                                                       features[t].size(), dim));
    }

    FrameTrace trace;
    trace.raw.resize(features.size());
    double peak = 0.0;
    for (std::size_t t = 0; t < features.size(); ++t) {
        double best = l2(features[t], sink_features.front());
        for (std::size_t s = 1; s < sink_features.size(); ++s) best = std::min(best, l2(features[t], sink_features[s]));
        trace.raw[t] = best;
        peak = std::max(peak, best);
    }
    trace.distances.resize(features.size(), 0.0);
    if (peak > 0.0) {
        for (std::size_t t = 0; t < features.size(); ++t) trace.distances[t] = trace.raw[t] / peak * 100.0;
    }
    trace.features = std::move(features);
    trace.sink_features = std::move(sink_features);
    return trace;
}

double percentile_linear(std::vector<double> values, double p)
{
    require(!values.empty(), "percentile of an empty set");
    require(p >= 0.0 && p <= 100.0, "percentile must lie in [0, 100]");
    std::sort(values.begin(), values.end());
    const double rank = p / 100.0 * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(rank));
    const auto hi = std::min(lo + 1, values.size() - 1);
    const double frac = rank - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
}

std::vector<double> drop_series(std::span<const double> distances, const CollapseParams& params)
{
    require(params.window >= 2, "collapse window must be >= 2");
    require(params.percentile > 50.0 && params.percentile < 100.0, "percentile must lie in (50, 100)");
    require(params.warmup >= 0, "warmup must be >= 0");
    const auto w = static_cast<std::size_t>(params.window);
    const auto start = static_cast<std::size_t>(params.warmup) + w;
    require(distances.size() >= start, fmt::format("trace of {} frames is shorter than warmup + window = {}",
                                                   distances.size(), start));
    std::vector<double> drops(distances.size(), 0.0);
    for (std::size_t t = start + 1; t < distances.size(); ++t) {
        std::vector<double> tail(distances.begin() + static_cast<std::ptrdiff_t>(t - w),
                                 distances.begin() + static_cast<std::ptrdiff_t>(t));
        drops[t] = std::max(0.0, percentile_linear(std::move(tail), params.percentile) - distances[t]);
    }
    return drops;
}

CollapseScore collapse_scores(std::span<const FrameTrace> traces, const CollapseParams& params)
{
    require(!traces.empty(), "empty corpus");
    CollapseScore score;
    for (const auto& tr : traces) {
        auto drops = drop_series(tr.distances, params);
        const double m = *std::max_element(drops.begin(), drops.end());
        score.trace_max_drop.push_back(m);
        score.drop_series.push_back(std::move(drops));
    }
    double acc = 0.0;
    for (double m : score.trace_max_drop) {
        score.max_drop = std::max(score.max_drop, m);
        acc += m;
    }
    score.avg_drop = acc / static_cast<double>(traces.size());
    return score;
}

double motion_proxy(std::span<const Feature> features, std::size_t skip, MotionStat stat)
{
    std::vector<double> steps;
    for (std::size_t t = skip; t + 1 < features.size(); ++t) steps.push_back(l2(features[t + 1], features[t]));
    if (steps.empty()) return 0.0;
    if (stat == MotionStat::Median) return percentile_linear(std::move(steps), 50.0);
    double acc = 0.0;
    for (double s : steps) acc += s;
    return acc / static_cast<double>(steps.size());
}

FeatureFile read_feature_file(std::istream& in)
{
    std::string header;
    require(static_cast<bool>(std::getline(in, header)), "feature file is empty");
    long dim = -1, frames = -1, sinks = -1;
    {
        std::istringstream hs(header);
        std::string tok;
        while (hs >> tok) {
            const auto eq = tok.find('=');
            require(eq != std::string::npos, "malformed header token '" + tok + "'");
            const auto key = tok.substr(0, eq);
            long val = 0;
            try {
                val = std::stol(tok.substr(eq + 1));
            } catch (const std::exception&) {
                throw ValidationError("malformed header value in '" + tok + "'");
            }
            if (key == "dim") dim = val;
            else if (key == "frames") frames = val;
            else if (key == "sinks") sinks = val;
            else throw ValidationError("unknown header key '" + key + "'");
        }
    }
    require(dim >= 1 && frames >= 0 && sinks >= 1, "header must be 'dim=<D> frames=<T> sinks=<S>' with D,S >= 1");

    FeatureFile file;
    auto read_row = [&](long row) {
        Feature f(static_cast<std::size_t>(dim));
        for (long i = 0; i < dim; ++i) {
            require(static_cast<bool>(in >> f[static_cast<std::size_t>(i)]),
                    fmt::format("feature row {} is truncated or non-numeric", row));
        }
        return f;
    };
    for (long s = 0; s < sinks; ++s) file.sinks.push_back(read_row(s));
    for (long t = 0; t < frames; ++t) file.frames.push_back(read_row(sinks + t));
    double extra = 0.0;
    require(!(in >> extra), "feature file has trailing values beyond the declared frames");
    return file;
}

FeatureFile read_feature_file(const std::string& path)
{
    std::ifstream in(path);
    require(in.good(), "cannot open feature file '" + path + "'");
    return read_feature_file(in);
}

void write_feature_file(std::ostream& out, const FeatureFile& file)
{
    require(!file.sinks.empty(), "feature file needs sinks");
    const auto dim = file.sinks.front().size();
    out << fmt::format("dim={} frames={} sinks={}\n", dim, file.frames.size(), file.sinks.size());
    auto row = [&](const Feature& f) {
        require(f.size() == dim, "feature dimension mismatch");
        for (std::size_t i = 0; i < f.size(); ++i) out << (i ? " " : "") << fmt::format("{:.17g}", f[i]);
        out << '\n';
    };
    for (const auto& f : file.sinks) row(f);
    for (const auto& f : file.frames) row(f);
}

RunningPercentile::RunningPercentile(std::size_t window, double percentile) : window_(window), percentile_(percentile)
{
    require(window >= 1, "window must be >= 1");
    require(percentile >= 0.0 && percentile <= 100.0, "percentile must lie in [0, 100]");
}

void RunningPercentile::push(double v)
{
    values_.push_back(v);
    if (values_.size() > window_) values_.pop_front();
}

double RunningPercentile::value() const
{
    return percentile_linear(std::vector<double>(values_.begin(), values_.end()), percentile_);
}

} // namespace sinkwatch
