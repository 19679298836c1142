// Median-filter baseline: coordinate-wise median of in-ROI event positions
// over a time window. Even counts use the lower median.
#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "evball/detection.hpp"
#include "evball/event.hpp"

namespace evball {

struct MedianConfig {
    std::size_t min_events = 5;
    std::int64_t window_ns = 200'000;  // used by the pipeline to slice windows
};

struct MedianFix {
    double x = 0, y = 0;
    std::int64_t t = 0;  // window end
};

// events must already be limited to the window [t0, t1]; t1 stamps the fix.
inline std::optional<MedianFix> median_detect(std::span<const Event> events, const Roi& roi,
                                              std::int64_t t1, std::size_t min_events) {
    thread_local std::vector<std::uint16_t> xs, ys;
    xs.clear();
    ys.clear();
    for (const Event& e : events) {
        if (!roi.contains(e.x, e.y)) continue;
        xs.push_back(e.x);
        ys.push_back(e.y);
    }
    if (xs.size() < min_events || xs.empty()) return std::nullopt;

    const std::size_t mid = (xs.size() - 1) / 2;  // lower median
    std::nth_element(xs.begin(), xs.begin() + mid, xs.end());
    std::nth_element(ys.begin(), ys.begin() + mid, ys.end());
    return MedianFix{static_cast<double>(xs[mid]), static_cast<double>(ys[mid]), t1};
}

}  // namespace evball
