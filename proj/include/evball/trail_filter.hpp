// Burst ("trail") pre-filter.
//
// Successive events of the same polarity at the same pixel within dt_burst
// are treated as one burst and only the first is kept. The suppression
// window is measured from the most recent event at that pixel/polarity,
// kept or dropped, so a dense burst keeps exactly its first event no matter
// how long it lasts.
#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "evball/event.hpp"

namespace evball {

class TrailFilter {
public:
    TrailFilter(std::int32_t width, std::int32_t height, std::int64_t dt_burst_ns)
        : width_(width),
          dt_burst_(dt_burst_ns),
          last_t_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * 2,
                  kNever) {}

    // Returns true if the event survives the filter. Updates the per-pixel
    // state either way.
    bool accept(const Event& e) {
        const std::size_t idx =
            (static_cast<std::size_t>(e.y) * static_cast<std::size_t>(width_) + e.x) * 2 +
            (e.p > 0 ? 1 : 0);
        const std::int64_t prev = last_t_[idx];
        last_t_[idx] = e.t;
        return prev == kNever || e.t - prev > dt_burst_;
    }

    void reset() { std::fill(last_t_.begin(), last_t_.end(), kNever); }

    std::int64_t dt_burst() const { return dt_burst_; }

private:
    static constexpr std::int64_t kNever = std::numeric_limits<std::int64_t>::min();
    std::int32_t width_;
    std::int64_t dt_burst_;
    std::vector<std::int64_t> last_t_;
};

inline std::vector<Event> trail_filter(const std::vector<Event>& events,
                                       const StreamHeader& header, std::int64_t dt_burst_ns) {
    TrailFilter f(header.width, header.height, dt_burst_ns);
    std::vector<Event> kept;
    kept.reserve(events.size());
    for (const Event& e : events)
        if (f.accept(e)) kept.push_back(e);
    return kept;
}

}  // namespace evball
