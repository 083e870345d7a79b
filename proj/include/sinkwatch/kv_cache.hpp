#pragma once

#include <cstdint>
#include <deque>
#include <vector>

namespace sinkwatch {

struct CacheEntry {
    std::int64_t frame = 0;
    std::vector<double> keys;   // heads x key_dim
    std::vector<double> values; // heads x value_dim
};

// Rolling KV cache whose first `sink_count` frames are never evicted.
// One aggregated token per latent frame.
class SinkKvCache {
public:
    SinkKvCache(int sink_count, int window);

    // Appends frame last+1 (or 0 on an empty cache); evicts the oldest non-sink frame on overflow.
    void push(CacheEntry entry);

    [[nodiscard]] int sink_count() const { return sink_count_; }
    [[nodiscard]] int window() const { return window_; }
    [[nodiscard]] std::size_t size() const { return sinks_.size() + recent_.size(); }
    [[nodiscard]] bool empty() const { return size() == 0; }
    [[nodiscard]] bool full() const { return size() >= static_cast<std::size_t>(window_); }
    [[nodiscard]] std::int64_t last_frame() const { return last_frame_; }

    // Entry i in cache order: sinks first, then the recent suffix.
    [[nodiscard]] const CacheEntry& at(std::size_t i) const;
    CacheEntry& at(std::size_t i);
    [[nodiscard]] bool is_sink(std::size_t i) const { return i < sinks_.size(); }

    [[nodiscard]] std::vector<std::int64_t> frames() const;
    CacheEntry* find(std::int64_t frame);

    void clear();

    // Rebuilds a cache from checkpointed entries; they must satisfy the cache invariants.
    static SinkKvCache restore(int sink_count, int window, std::vector<CacheEntry> entries);

private:
    int sink_count_;
    int window_;
    std::int64_t last_frame_ = -1;
    std::vector<CacheEntry> sinks_;
    std::deque<CacheEntry> recent_;
};

} // namespace sinkwatch
