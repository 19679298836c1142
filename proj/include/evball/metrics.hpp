// Detection and reconstruction quality metrics.
//
// Detections are compared against ground-truth circles by linear
// interpolation of the detections to each truth timestamp. Truth samples
// outside the detection time span have no bracketing detections; they are
// excluded from the averages and reported separately. Circle overlap uses
// the exact two-circle lens area.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "evball/detection.hpp"
#include "evball/sim.hpp"

namespace evball {

inline double circle_intersection_area(double r1, double r2, double d) {
    if (r1 < 0 || r2 < 0 || d < 0) throw std::invalid_argument("circle overlap: negative input");
    if (d >= r1 + r2) return 0.0;
    const double rmin = std::min(r1, r2);
    if (d <= std::abs(r1 - r2)) return std::numbers::pi * rmin * rmin;
    const double d1 = (d * d - r2 * r2 + r1 * r1) / (2.0 * d);
    const double d2 = d - d1;
    auto segment = [](double r, double x) {
        const double c = std::clamp(x / r, -1.0, 1.0);
        return r * r * std::acos(c) - x * std::sqrt(std::max(r * r - x * x, 0.0));
    };
    return segment(r1, d1) + segment(r2, d2);
}

inline double circle_iou(double r1, double r2, double d) {
    const double inter = circle_intersection_area(r1, r2, d);
    const double uni = std::numbers::pi * (r1 * r1 + r2 * r2) - inter;
    return uni > 0 ? inter / uni : 1.0;
}

inline double mean(std::span<const double> xs) {
    if (xs.empty()) throw std::invalid_argument("mean of empty sample");
    double s = 0;
    for (double x : xs) s += x;
    return s / static_cast<double>(xs.size());
}

inline double sample_stddev(std::span<const double> xs) {
    if (xs.size() < 2) throw std::invalid_argument("stddev needs at least 2 samples");
    const double m = mean(xs);
    double s = 0;
    for (double x : xs) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(xs.size() - 1));
}

inline double median_of(std::vector<double> xs) {
    if (xs.empty()) throw std::invalid_argument("median of empty sample");
    const std::size_t mid = xs.size() / 2;
    std::nth_element(xs.begin(), xs.begin() + mid, xs.end());
    double hi = xs[mid];
    if (xs.size() % 2 == 1) return hi;
    std::nth_element(xs.begin(), xs.begin() + mid - 1, xs.begin() + mid);
    return 0.5 * (xs[mid - 1] + hi);
}

struct DetectionEval {
    double mean_pixel_error = 0;
    double stddev_pixel_error = 0;  // 0 when fewer than 2 matched samples
    double mean_iou = 0;
    double stddev_iou = 0;          // 0 when fewer than 2 radius-bearing samples
    std::size_t n_matched = 0;      // truth samples bracketed by detections
    std::size_t n_unmatched = 0;    // truth samples with no bracketing detections
    std::size_t n_iou = 0;          // matched samples with radius information
};

// Both sequences must be sorted by timestamp. Radius-free samples (a
// detection pair interpolating to r == 0, e.g. from the median baseline)
// are excluded from the IoU statistics; pixel error uses centers only.
// Throws when not a single truth sample is bracketed.
inline DetectionEval evaluate_detections(std::span<const CircleDetection> dets,
                                         std::span<const GtCircle> gt) {
    if (gt.empty()) throw std::invalid_argument("evaluate: empty ground truth");
    DetectionEval ev;
    std::vector<double> errs, ious;
    std::size_t hi = 0;
    for (const auto& g : gt) {
        if (dets.empty() || g.t < dets.front().t || g.t > dets.back().t) {
            ++ev.n_unmatched;
            continue;
        }
        while (hi < dets.size() && dets[hi].t < g.t) ++hi;
        double cx, cy, r;
        if (hi < dets.size() && dets[hi].t == g.t) {
            cx = dets[hi].cx;
            cy = dets[hi].cy;
            r = dets[hi].r;
        } else {
            const auto& a = dets[hi - 1];
            const auto& b = dets[hi];
            const double f =
                b.t == a.t ? 0.0
                           : static_cast<double>(g.t - a.t) / static_cast<double>(b.t - a.t);
            cx = a.cx + f * (b.cx - a.cx);
            cy = a.cy + f * (b.cy - a.cy);
            r = a.r + f * (b.r - a.r);
        }
        const double dist = std::hypot(cx - g.cx, cy - g.cy);
        errs.push_back(dist);
        if (r > 0 && g.r > 0) ious.push_back(circle_iou(r, g.r, dist));
    }
    ev.n_matched = errs.size();
    ev.n_iou = ious.size();
    if (errs.empty()) throw std::runtime_error("evaluate: zero matched samples");
    ev.mean_pixel_error = mean(errs);
    if (errs.size() >= 2) ev.stddev_pixel_error = sample_stddev(errs);
    if (!ious.empty()) {
        ev.mean_iou = mean(ious);
        if (ious.size() >= 2) ev.stddev_iou = sample_stddev(ious);
    }
    return ev;
}

inline double update_rate(std::size_t n_detections, double duration_s) {
    if (duration_s <= 0) throw std::invalid_argument("update_rate: duration must be > 0");
    return static_cast<double>(n_detections) / duration_s;
}

struct TimedPoint {
    std::int64_t t = 0;
    Eigen::Vector3d p = Eigen::Vector3d::Zero();
};

struct PointEval {
    double mean_error_m = 0;
    double median_error_m = 0;
    double rmse_m = 0;
    std::size_t n_evaluated = 0;
    std::size_t n_outside = 0;
};

inline PointEval evaluate_points(std::span<const TimedPoint> points,
                                 std::span<const GtState> gt) {
    if (gt.size() < 2) throw std::invalid_argument("evaluate: need at least 2 truth samples");
    PointEval ev;
    std::vector<double> errs;
    std::size_t hi = 0;
    for (const auto& pt : points) {
        if (pt.t < gt.front().t || pt.t > gt.back().t) {
            ++ev.n_outside;
            continue;
        }
        while (hi < gt.size() && gt[hi].t < pt.t) ++hi;
        Eigen::Vector3d ref;
        if (hi < gt.size() && gt[hi].t == pt.t) {
            ref = gt[hi].p;
        } else {
            const auto& a = gt[hi - 1];
            const auto& b = gt[hi];
            const double f = static_cast<double>(pt.t - a.t) / static_cast<double>(b.t - a.t);
            ref = a.p + f * (b.p - a.p);
        }
        errs.push_back((pt.p - ref).norm());
    }
    ev.n_evaluated = errs.size();
    if (!errs.empty()) {
        ev.mean_error_m = mean(errs);
        ev.median_error_m = median_of(errs);
        double sq = 0;
        for (double e : errs) sq += e * e;
        ev.rmse_m = std::sqrt(sq / static_cast<double>(errs.size()));
    }
    return ev;
}

}  // namespace evball
