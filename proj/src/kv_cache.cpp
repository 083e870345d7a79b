#include "sinkwatch/kv_cache.hpp"

#include <string>

#include "sinkwatch/error.hpp"

namespace sinkwatch {

SinkKvCache::SinkKvCache(int sink_count, int window) : sink_count_(sink_count), window_(window)
{
    require(sink_count >= 0, "sink count must be >= 0");
    require(window > sink_count, "window (" + std::to_string(window) + ") must exceed sink count (" +
                                     std::to_string(sink_count) + ")");
}

void SinkKvCache::push(CacheEntry entry)
{
    require(entry.frame == last_frame_ + 1, "non-consecutive frame index " + std::to_string(entry.frame) +
                                                " (expected " + std::to_string(last_frame_ + 1) + ")");
    last_frame_ = entry.frame;
    if (entry.frame < sink_count_) {
        sinks_.push_back(std::move(entry));
        return;
    }
    recent_.push_back(std::move(entry));
    while (size() > static_cast<std::size_t>(window_)) recent_.pop_front();
}

const CacheEntry& SinkKvCache::at(std::size_t i) const
{
    require(i < size(), "cache slot out of range");
    return i < sinks_.size() ? sinks_[i] : recent_[i - sinks_.size()];
}

CacheEntry& SinkKvCache::at(std::size_t i)
{
    require(i < size(), "cache slot out of range");
    return i < sinks_.size() ? sinks_[i] : recent_[i - sinks_.size()];
}

std::vector<std::int64_t> SinkKvCache::frames() const
{
    std::vector<std::int64_t> out;
    out.reserve(size());
    for (const auto& e : sinks_) out.push_back(e.frame);
    for (const auto& e : recent_) out.push_back(e.frame);
    return out;
}

CacheEntry* SinkKvCache::find(std::int64_t frame)
{
    for (auto& e : sinks_) {
        if (e.frame == frame) return &e;
    }
    for (auto& e : recent_) {
        if (e.frame == frame) return &e;
    }
    return nullptr;
}

void SinkKvCache::clear()
{
    sinks_.clear();
    recent_.clear();
    last_frame_ = -1;
}

SinkKvCache SinkKvCache::restore(int sink_count, int window, std::vector<CacheEntry> entries)
{
    SinkKvCache cache(sink_count, window);
    require(entries.size() <= static_cast<std::size_t>(window), "checkpoint holds more frames than the window");
    for (std::size_t i = 0; i < entries.size(); ++i) {
        auto& e = entries[i];
        const bool sink_slot = i < static_cast<std::size_t>(sink_count);
        if (sink_slot) {
            require(e.frame == static_cast<std::int64_t>(i), "sink region must hold frames 0..S-1");
            cache.sinks_.push_back(std::move(e));
        } else {
            require(cache.sinks_.size() == static_cast<std::size_t>(sink_count), "recent frames before sinks");
            require(cache.recent_.empty() || e.frame == cache.recent_.back().frame + 1,
                    "recent frames must be contiguous");
            require(e.frame >= sink_count, "recent frame inside the sink region");
            cache.recent_.push_back(std::move(e));
        }
        cache.last_frame_ = cache.at(cache.size() - 1).frame;
    }
    return cache;
}

} // namespace sinkwatch
