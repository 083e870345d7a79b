#pragma once

#include <cstddef>
#include <deque>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace sinkwatch {

using Feature = std::vector<double>;

struct FrameTrace {
    std::vector<Feature> features;
    std::vector<Feature> sink_features;
    std::vector<double> raw;       // min over sinks of L2 distance
    std::vector<double> distances; // raw scaled so the trace maximum is 100
};

FrameTrace distance_trace(std::vector<Feature> features, std::vector<Feature> sink_features);

struct CollapseParams {
    int window = 32;
    double percentile = 90.0;
    int warmup = 35; // sink_count + window at the defaults
};

struct CollapseScore {
    double max_drop = 0.0;
    double avg_drop = 0.0;
    std::vector<double> trace_max_drop;
    std::vector<std::vector<double>> drop_series;
};

// numpy-style linear interpolation between closest ranks; p in [0, 100].
double percentile_linear(std::vector<double> values, double p);

// Drop series of one trace: max(0, P(trailing window) - d(t)) for t > warmup + window, else 0.
std::vector<double> drop_series(std::span<const double> distances, const CollapseParams& params);

CollapseScore collapse_scores(std::span<const FrameTrace> traces, const CollapseParams& params);

enum class MotionStat { Median, Mean };

// Statistic of |f[t+1] - f[t]| over frames t >= skip.
double motion_proxy(std::span<const Feature> features, std::size_t skip, MotionStat stat = MotionStat::Median);

// Text feature format: header "dim=<D> frames=<T> sinks=<S>", then S sink rows,
// then T frame rows, each row D whitespace-separated reals.
struct FeatureFile {
    std::vector<Feature> sinks;
    std::vector<Feature> frames;
};

FeatureFile read_feature_file(std::istream& in);
FeatureFile read_feature_file(const std::string& path);
void write_feature_file(std::ostream& out, const FeatureFile& file);

// Percentile over the most recent `window` pushed values; O(window) memory.
class RunningPercentile {
public:
    RunningPercentile(std::size_t window, double percentile);
    void push(double v);
    [[nodiscard]] bool ready() const { return values_.size() == window_; }
    [[nodiscard]] double value() const;
    [[nodiscard]] std::size_t size() const { return values_.size(); }

private:
    std::size_t window_;
    double percentile_;
    std::deque<double> values_;
};

} // namespace sinkwatch
