// Two-mode ball tracker: full-resolution initialization, ROI detection
// afterwards with the previous ball position as the next ROI center.
#pragma once

#include <cmath>
#include <optional>

#include "evball/hough.hpp"

namespace evball {

struct TrackerConfig {
    HoughConfig hough;
    int miss_limit = 5;
    std::int32_t roi_half = 0;  // 0 selects 3 * r_max

    std::int32_t effective_roi_half() const {
        return roi_half > 0 ? roi_half
                            : static_cast<std::int32_t>(std::lround(3.0 * hough.r_max));
    }
};

struct TrackerState {
    enum class Mode { initializing, tracking };
    Mode mode = Mode::initializing;
    Roi roi{};
    int miss_count = 0;
};

inline std::optional<CircleDetection> track_step(TrackerState& state, const Image8& img,
                                                 const TrackerConfig& cfg, HoughWorkspace& ws) {
    if (state.mode == TrackerState::Mode::initializing) {
        auto det = hough_detect(img, cfg.hough, std::nullopt, ws);
        if (det) {
            state.mode = TrackerState::Mode::tracking;
            state.roi = Roi{det->cx, det->cy, cfg.effective_roi_half()};
            state.miss_count = 0;
        }
        return det;
    }

    auto det = hough_detect(img, cfg.hough, state.roi, ws);
    if (det) {
        state.roi.cx = det->cx;
        state.roi.cy = det->cy;
        state.miss_count = 0;
    } else if (++state.miss_count >= cfg.miss_limit) {
        state.mode = TrackerState::Mode::initializing;
        state.miss_count = 0;
    }
    return det;
}

inline std::optional<CircleDetection> track_step(TrackerState& state, const Image8& img,
                                                 const TrackerConfig& cfg) {
    HoughWorkspace ws;
    return track_step(state, img, cfg, ws);
}

}  // namespace evball
