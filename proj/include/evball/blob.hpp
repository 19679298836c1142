// ROI initialization for the median/particle baselines: blob detection on
// an accumulated event-count frame.
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "evball/detection.hpp"
#include "evball/event.hpp"

namespace evball {

struct BlobConfig {
    int min_count = 1;      // per-pixel event count threshold
    double ar_max = 3.0;    // max bounding-box aspect ratio
    int min_px = 8;         // component size limits in pixels
    int max_px = 20000;
    std::int32_t roi_half = 48;
};

// Accumulates per-pixel counts over [first.t, first.t + window_ns],
// thresholds, and returns an ROI around the centroid of the largest
// 8-connected component that passes the aspect-ratio and size filters.
inline std::optional<Roi> blob_init(std::span<const Event> events, std::int64_t window_ns,
                                    const StreamHeader& header, const BlobConfig& cfg) {
    if (events.empty()) return std::nullopt;
    const std::int64_t t_end = events.front().t + window_ns;

    const std::size_t n_px = static_cast<std::size_t>(header.width) * header.height;
    std::vector<std::uint16_t> counts(n_px, 0);
    for (const Event& e : events) {
        if (e.t > t_end) break;
        std::uint16_t& c = counts[static_cast<std::size_t>(e.y) * header.width + e.x];
        if (c != 0xffff) ++c;
    }

    std::vector<std::uint8_t> mask(n_px, 0);
    for (std::size_t i = 0; i < n_px; ++i) mask[i] = counts[i] >= cfg.min_count;

    // 8-connected components by BFS over the mask.
    std::vector<std::int32_t> stack;
    double best_cx = 0, best_cy = 0;
    std::int64_t best_size = 0;
    for (std::size_t start = 0; start < n_px; ++start) {
        if (!mask[start]) continue;
        stack.clear();
        stack.push_back(static_cast<std::int32_t>(start));
        mask[start] = 0;
        std::int64_t size = 0, sum_x = 0, sum_y = 0;
        std::int32_t min_x = header.width, max_x = -1, min_y = header.height, max_y = -1;
        while (!stack.empty()) {
            const std::int32_t idx = stack.back();
            stack.pop_back();
            const std::int32_t x = idx % header.width, y = idx / header.width;
            ++size;
            sum_x += x;
            sum_y += y;
            min_x = std::min(min_x, x);
            max_x = std::max(max_x, x);
            min_y = std::min(min_y, y);
            max_y = std::max(max_y, y);
            for (std::int32_t dy = -1; dy <= 1; ++dy) {
                for (std::int32_t dx = -1; dx <= 1; ++dx) {
                    const std::int32_t nx = x + dx, ny = y + dy;
                    if (nx < 0 || nx >= header.width || ny < 0 || ny >= header.height) continue;
                    const std::size_t ni = static_cast<std::size_t>(ny) * header.width + nx;
                    if (mask[ni]) {
                        mask[ni] = 0;
                        stack.push_back(static_cast<std::int32_t>(ni));
                    }
                }
            }
        }
        const double bw = max_x - min_x + 1, bh = max_y - min_y + 1;
        const double ar = bw > bh ? bw / bh : bh / bw;
        if (ar > cfg.ar_max || size < cfg.min_px || size > cfg.max_px) continue;
        if (size > best_size) {
            best_size = size;
            best_cx = static_cast<double>(sum_x) / size;
            best_cy = static_cast<double>(sum_y) / size;
        }
    }

    if (best_size == 0) return std::nullopt;
    return Roi{best_cx, best_cy, cfg.roi_half};
}

}  // namespace evball
