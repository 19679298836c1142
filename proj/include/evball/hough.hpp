// Gradient-voting circular Hough detector.
//
// The snapshot is max-dilated 3x3 so that sparse single-pixel activations
// merge into contiguous bands whose central-difference gradients point
// radially. Edge pixels (gradient magnitude above a threshold) vote along
// +/- their gradient direction at every candidate radius into one shared
// center accumulator. The peak is the cell with the highest 3x3 vote sum;
// radius and score come from the edges whose gradient line passes near the
// recovered center, so the score reads as the supported perimeter fraction.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <vector>

#include "evball/detection.hpp"
#include "evball/image.hpp"

namespace evball {

struct HoughConfig {
    double r_min = 4.0;
    double r_max = 20.0;
    int grad_min = 64;       // magnitude threshold on a 0..255 gradient scale
    double min_score = 0.33; // minimum supported perimeter fraction
};

struct HoughWorkspace {
    struct Edge {
        float x, y;
        float ux, uy;  // unit gradient
    };
    std::vector<std::uint8_t> dil;
    std::vector<std::uint8_t> smooth;
    std::vector<std::uint16_t> acc;
    std::vector<Edge> edges;
};

inline std::optional<CircleDetection> hough_detect(const Image8& img, const HoughConfig& cfg,
                                                   const std::optional<Roi>& roi,
                                                   HoughWorkspace& ws) {
    if (cfg.r_min < 2.0) throw std::invalid_argument("hough: r_min must be >= 2");
    if (cfg.r_max < cfg.r_min) throw std::invalid_argument("hough: r_max < r_min");

    Roi::Rect region{0, 0, img.width - 1, img.height - 1};
    if (roi) {
        region = roi->clamped(img.width, img.height);
        if (region.empty()) throw std::invalid_argument("hough: roi does not intersect image");
    }

    const std::int32_t r_lo = static_cast<std::int32_t>(std::ceil(cfg.r_min));
    const std::int32_t r_hi = static_cast<std::int32_t>(std::floor(cfg.r_max));
    const std::int32_t n_radii = r_hi - r_lo + 1;
    if (n_radii < 1) throw std::invalid_argument("hough: no radius bin in [r_min, r_max]");

    // Gradients are taken on a 3x3 max-dilated, 3x3 box-smoothed copy of the
    // search region. Dilation merges sparse activations into contiguous
    // bands; smoothing turns their staircase boundaries into ramps so the
    // central-difference directions interpolate instead of snapping to the
    // axes. Both passes read the full image (replicated at its border), so a
    // ROI pass sees the same local structure as a full-resolution pass. The
    // buffer is padded two pixels: one for the blur, one for the gradient.
    const std::int32_t ex0 = std::max(region.x0, 1), ex1 = std::min(region.x1, img.width - 2);
    const std::int32_t ey0 = std::max(region.y0, 1), ey1 = std::min(region.y1, img.height - 2);
    if (ex1 < ex0 || ey1 < ey0) return std::nullopt;
    const std::int32_t bx0 = ex0 - 2, by0 = ey0 - 2;
    const std::int32_t bw = ex1 - ex0 + 5, bh = ey1 - ey0 + 5;
    ws.dil.resize(static_cast<std::size_t>(bw) * bh);
    for (std::int32_t y = 0; y < bh; ++y) {
        const std::int32_t iy = std::clamp(by0 + y, 0, img.height - 1);
        const std::int32_t y0 = std::max(iy - 1, 0), y1 = std::min(iy + 1, img.height - 1);
        std::uint8_t* out = ws.dil.data() + static_cast<std::size_t>(y) * bw;
        for (std::int32_t x = 0; x < bw; ++x) {
            const std::int32_t ix = std::clamp(bx0 + x, 0, img.width - 1);
            const std::int32_t x0 = std::max(ix - 1, 0), x1 = std::min(ix + 1, img.width - 1);
            std::uint8_t m = 0;
            for (std::int32_t yy = y0; yy <= y1; ++yy) {
                const std::uint8_t* row = img.row(yy);
                for (std::int32_t xx = x0; xx <= x1; ++xx) m = std::max(m, row[xx]);
            }
            out[x] = m;
        }
    }
    ws.smooth.assign(static_cast<std::size_t>(bw) * bh, 0);
    for (std::int32_t y = 1; y < bh - 1; ++y) {
        for (std::int32_t x = 1; x < bw - 1; ++x) {
            std::uint32_t s = 0;
            for (std::int32_t dy = -1; dy <= 1; ++dy) {
                const std::uint8_t* row = ws.dil.data() + static_cast<std::size_t>(y + dy) * bw;
                s += row[x - 1] + row[x] + row[x + 1];
            }
            ws.smooth[static_cast<std::size_t>(y) * bw + x] = static_cast<std::uint8_t>(s / 9);
        }
    }

    const std::int64_t mag2_min = 4LL * cfg.grad_min * cfg.grad_min;
    ws.edges.clear();
    for (std::int32_t y = ey0; y <= ey1; ++y) {
        const std::uint8_t* above = ws.smooth.data() + static_cast<std::size_t>(y - 1 - by0) * bw;
        const std::uint8_t* cur = above + bw;
        const std::uint8_t* below = cur + bw;
        for (std::int32_t x = ex0; x <= ex1; ++x) {
            const std::int32_t bx = x - bx0;
            const std::int32_t gx = std::int32_t(cur[bx + 1]) - std::int32_t(cur[bx - 1]);
            const std::int32_t gy = std::int32_t(below[bx]) - std::int32_t(above[bx]);
            const std::int64_t mag2 = std::int64_t(gx) * gx + std::int64_t(gy) * gy;
            if (mag2 < mag2_min) continue;
            const float inv = 1.0f / std::sqrt(static_cast<float>(mag2));
            ws.edges.push_back({static_cast<float>(x), static_cast<float>(y), gx * inv, gy * inv});
        }
    }
    if (ws.edges.empty()) return std::nullopt;

    const std::int32_t rw = region.width(), rh = region.height();
    ws.acc.assign(static_cast<std::size_t>(rw) * rh, 0);
    for (const auto& e : ws.edges) {
        for (std::int32_t r = r_lo; r <= r_hi; ++r) {
            for (int sign = -1; sign <= 1; sign += 2) {
                const auto cx = static_cast<std::int32_t>(std::lround(e.x + sign * r * e.ux));
                const auto cy = static_cast<std::int32_t>(std::lround(e.y + sign * r * e.uy));
                if (cx < region.x0 || cx > region.x1 || cy < region.y0 || cy > region.y1)
                    continue;
                ++ws.acc[static_cast<std::size_t>(cy - region.y0) * rw + (cx - region.x0)];
            }
        }
    }

    // Peak: cell maximizing the 3x3 vote sum, which tolerates the tangential
    // vote scatter of imperfect gradient directions on large circles.
    std::int32_t px = -1, py = -1;
    std::uint32_t best_sum = 0;
    for (std::int32_t y = 0; y < rh; ++y) {
        for (std::int32_t x = 0; x < rw; ++x) {
            std::uint32_t s = 0;
            for (std::int32_t dy = std::max(y - 1, 0); dy <= std::min(y + 1, rh - 1); ++dy)
                for (std::int32_t dx = std::max(x - 1, 0); dx <= std::min(x + 1, rw - 1); ++dx)
                    s += ws.acc[static_cast<std::size_t>(dy) * rw + dx];
            if (s > best_sum) {
                best_sum = s;
                px = x;
                py = y;
            }
        }
    }
    if (best_sum == 0) return std::nullopt;

    // Subpixel center: centroid of the 3x3 accumulator neighborhood.
    double sw = 0, sx = 0, sy = 0;
    for (std::int32_t dy = std::max(py - 1, 0); dy <= std::min(py + 1, rh - 1); ++dy) {
        for (std::int32_t dx = std::max(px - 1, 0); dx <= std::min(px + 1, rw - 1); ++dx) {
            const double v = ws.acc[static_cast<std::size_t>(dy) * rw + dx];
            sw += v;
            sx += v * (region.x0 + dx);
            sy += v * (region.y0 + dy);
        }
    }
    const double cx = sx / sw, cy = sy / sw;

    // Supporting edges: gradient line passes near the center and distance
    // falls in a candidate radius bin. Radius is the count-weighted mean
    // distance over bins holding at least half the strongest bin. Score is
    // the fraction of perimeter angle covered by supporting edges, so a
    // thick boundary band cannot outscore its angular extent.
    std::vector<std::int32_t> bin_n(n_radii, 0);
    std::vector<double> bin_d(n_radii, 0.0);
    for (const auto& e : ws.edges) {
        const double rx = e.x - cx, ry = e.y - cy;
        if (std::abs(rx * e.uy - ry * e.ux) > 3.0) continue;
        const double d = std::sqrt(rx * rx + ry * ry);
        const auto bin = static_cast<std::int32_t>(std::lround(d));
        if (bin < r_lo || bin > r_hi) continue;
        ++bin_n[bin - r_lo];
        bin_d[bin - r_lo] += d;
    }
    const auto it_max = std::max_element(bin_n.begin(), bin_n.end());
    const std::int32_t n_max = *it_max;
    if (n_max == 0) return std::nullopt;
    const auto i_max = static_cast<std::int32_t>(it_max - bin_n.begin());
    // A 1-pixel boundary ring lands in 2-3 adjacent distance bins; keep the
    // peak's immediate neighbors as well as any bin holding at least half the
    // peak count, so support reflects the whole band rather than its mode.
    auto supporting = [&](std::int32_t i) {
        return bin_n[i] * 2 >= n_max || std::abs(i - i_max) <= 1;
    };
    std::int64_t support = 0;
    double d_sum = 0;
    for (std::int32_t i = 0; i < n_radii; ++i) {
        if (!supporting(i)) continue;
        support += bin_n[i];
        d_sum += bin_d[i];
    }
    const double r = d_sum / static_cast<double>(support);

    // Angular bins ~2.5 arc-pixels wide: a contiguous edge arc then fills its
    // bins densely, so the score reads the arc's angular extent instead of
    // being depressed by rounding gaps between single-pixel samples.
    const auto n_theta = static_cast<std::int32_t>(
        std::clamp<long>(std::lround(2.0 * std::numbers::pi * r / 2.5), 12, 48));
    std::vector<std::uint8_t> covered(n_theta, 0);
    for (const auto& e : ws.edges) {
        const double rx = e.x - cx, ry = e.y - cy;
        if (std::abs(rx * e.uy - ry * e.ux) > 3.0) continue;
        const double d = std::sqrt(rx * rx + ry * ry);
        const auto bin = static_cast<std::int32_t>(std::lround(d));
        if (bin < r_lo || bin > r_hi || !supporting(bin - r_lo)) continue;
        const double a = std::atan2(ry, rx) + std::numbers::pi;
        auto ti = static_cast<std::int32_t>(a / (2.0 * std::numbers::pi) * n_theta);
        if (ti >= n_theta) ti = 0;
        covered[ti] = 1;
    }
    const auto coverage =
        static_cast<std::int32_t>(std::count(covered.begin(), covered.end(), std::uint8_t{1}));
    const double score = std::min(static_cast<double>(coverage) / n_theta, 1.0);
    if (score < cfg.min_score) return std::nullopt;

    CircleDetection det;
    det.cx = cx;
    det.cy = cy;
    det.r = r;
    det.score = score;
    return det;
}

inline std::optional<CircleDetection> hough_detect(const Image8& img, const HoughConfig& cfg,
                                                   const std::optional<Roi>& roi = std::nullopt) {
    HoughWorkspace ws;
    return hough_detect(img, cfg, roi, ws);
}

}  // namespace evball
