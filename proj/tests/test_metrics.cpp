#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "evball/detection.hpp"
#include "evball/metrics.hpp"
#include "evball/rng.hpp"
#include "evball/sim.hpp"

using evball::CircleDetection;
using evball::GtCircle;
using evball::GtState;

namespace {

CircleDetection det(std::int64_t t, double cx, double cy, double r) {
    CircleDetection d;
    d.t = t;
    d.cx = cx;
    d.cy = cy;
    d.r = r;
    d.score = 1.0;
    d.camera_id = "cam";
    return d;
}

}  // namespace

TEST_CASE("circle overlap handles the containment and disjoint regimes") {
    const double pi = std::numbers::pi;
    CHECK(evball::circle_intersection_area(5, 5, 0) == Catch::Approx(pi * 25));
    CHECK(evball::circle_intersection_area(10, 3, 2) == Catch::Approx(pi * 9));
    CHECK(evball::circle_intersection_area(4, 3, 7) == 0.0);
    CHECK(evball::circle_intersection_area(4, 3, 12) == 0.0);
    CHECK_THROWS_AS(evball::circle_intersection_area(-1, 3, 2), std::invalid_argument);
    CHECK_THROWS_AS(evball::circle_intersection_area(1, -3, 2), std::invalid_argument);
    CHECK_THROWS_AS(evball::circle_intersection_area(1, 3, -2), std::invalid_argument);

    CHECK(evball::circle_iou(6, 6, 0) == 1.0);
    CHECK(evball::circle_iou(4, 3, 20) == 0.0);
    CHECK(evball::circle_iou(10, 3, 2) == Catch::Approx(0.09));
    CHECK(evball::circle_iou(0, 0, 0) == 1.0);  // empty against empty
}

TEST_CASE("half-overlapping equal circles match the closed form and Monte Carlo") {
    // Two r = 10 circles with centers 10 apart: lens area
    // 2 * (r^2 acos(d/2r) - (d/2) sqrt(r^2 - d^2/4)).
    const double analytic = 2.0 * (100.0 * std::acos(0.5) - 5.0 * std::sqrt(75.0));
    const double inter = evball::circle_intersection_area(10, 10, 10);
    CHECK(inter == Catch::Approx(analytic).margin(1e-9));
    CHECK(inter == Catch::Approx(122.83697).margin(1e-4));

    // Monte Carlo cross-check over the lens bounding box [0,10] x [-10,10].
    std::mt19937_64 gen(2024);
    const int n = 2'000'000;
    int hits = 0;
    for (int i = 0; i < n; ++i) {
        const double x = evball::uniform(gen, 0.0, 10.0);
        const double y = evball::uniform(gen, -10.0, 10.0);
        const bool in1 = x * x + y * y <= 100.0;
        const bool in2 = (x - 10.0) * (x - 10.0) + y * y <= 100.0;
        if (in1 && in2) ++hits;
    }
    const double mc = 200.0 * static_cast<double>(hits) / n;
    CHECK(std::abs(mc - inter) < 0.3);  // 4 sigma of the estimator

    const double iou = evball::circle_iou(10, 10, 10);
    CHECK(iou == Catch::Approx(inter / (200.0 * std::numbers::pi - inter)).margin(1e-12));
    CHECK(iou == Catch::Approx(0.2430).margin(1e-3));
}

TEST_CASE("mean stddev and median behave on small samples") {
    const std::vector<double> xs = {1, 2, 3, 4};
    CHECK(evball::mean(xs) == Catch::Approx(2.5));
    CHECK(evball::sample_stddev(xs) == Catch::Approx(std::sqrt(5.0 / 3.0)));
    CHECK(evball::median_of({3, 1, 2}) == 2.0);
    CHECK(evball::median_of({4, 1, 3, 2}) == 2.5);
    CHECK(evball::median_of({7}) == 7.0);
    CHECK_THROWS_AS(evball::mean({}), std::invalid_argument);
    CHECK_THROWS_AS(evball::sample_stddev(std::vector<double>{1.0}), std::invalid_argument);
    CHECK_THROWS_AS(evball::median_of({}), std::invalid_argument);
}

TEST_CASE("perfect detections evaluate to zero error and unit IoU") {
    std::vector<CircleDetection> dets;
    std::vector<GtCircle> gt;
    for (int i = 0; i <= 10; ++i) {
        dets.push_back(det(i * 1000, 100.0 + i, 50.0, 9.0));
        gt.push_back({i * 1000, 100.0 + i, 50.0, 9.0});
    }
    const auto ev = evball::evaluate_detections(dets, gt);
    CHECK(ev.mean_pixel_error == Catch::Approx(0.0).margin(1e-12));
    CHECK(ev.stddev_pixel_error == Catch::Approx(0.0).margin(1e-12));
    CHECK(ev.mean_iou == Catch::Approx(1.0).margin(1e-12));
    CHECK(ev.stddev_iou == Catch::Approx(0.0).margin(1e-12));
    CHECK(ev.n_matched == 11);
    CHECK(ev.n_unmatched == 0);
    CHECK(ev.n_iou == 11);
}

TEST_CASE("a constant shift shows up as its exact pixel error") {
    std::vector<CircleDetection> dets;
    std::vector<GtCircle> gt;
    for (int i = 0; i <= 10; ++i) {
        dets.push_back(det(i * 1000, 101.0 + i, 50.0, 10.0));  // +1 px in x
        gt.push_back({i * 1000, 100.0 + i, 50.0, 10.0});
    }
    const auto ev = evball::evaluate_detections(dets, gt);
    CHECK(ev.mean_pixel_error == Catch::Approx(1.0).margin(1e-12));
    CHECK(ev.stddev_pixel_error == Catch::Approx(0.0).margin(1e-12));
    CHECK(ev.mean_iou > 0.8);
    CHECK(ev.mean_iou < 1.0);
    CHECK(ev.mean_iou ==
          Catch::Approx(evball::circle_iou(10.0, 10.0, 1.0)).margin(1e-12));
}

TEST_CASE("detections interpolate to the truth timestamps") {
    const std::vector<CircleDetection> dets = {det(0, 0.0, 5.0, 8.0),
                                               det(1000, 10.0, 5.0, 8.0)};
    const std::vector<GtCircle> gt = {{250, 2.5, 5.0, 8.0}};
    const auto ev = evball::evaluate_detections(dets, gt);
    CHECK(ev.n_matched == 1);
    CHECK(ev.mean_pixel_error < 1e-9);
    CHECK(ev.mean_iou == Catch::Approx(1.0).margin(1e-9));
}

TEST_CASE("an exact-timestamp detection is used verbatim") {
    // The middle detection sits off the line through its neighbors; a truth
    // sample at its exact timestamp must see it, not the interpolation.
    const std::vector<CircleDetection> dets = {det(0, 0.0, 0.0, 8.0), det(500, 7.0, 0.0, 8.0),
                                               det(1000, 10.0, 0.0, 8.0)};
    const std::vector<GtCircle> gt = {{500, 7.0, 0.0, 8.0}};
    const auto ev = evball::evaluate_detections(dets, gt);
    CHECK(ev.mean_pixel_error < 1e-12);
}

TEST_CASE("truth samples outside the detection span are unmatched") {
    const std::vector<CircleDetection> dets = {det(1000, 5.0, 5.0, 8.0),
                                               det(2000, 6.0, 5.0, 8.0)};
    const std::vector<GtCircle> gt = {
        {0, 5.0, 5.0, 8.0}, {1500, 5.5, 5.0, 8.0}, {3000, 7.0, 5.0, 8.0}};
    const auto ev = evball::evaluate_detections(dets, gt);
    CHECK(ev.n_matched == 1);
    CHECK(ev.n_unmatched == 2);
    CHECK(ev.mean_pixel_error == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("evaluation failure modes throw") {
    const std::vector<CircleDetection> dets = {det(1000, 5.0, 5.0, 8.0)};
    CHECK_THROWS_AS(evball::evaluate_detections(dets, {}), std::invalid_argument);
    const std::vector<GtCircle> outside = {{0, 5.0, 5.0, 8.0}, {2000, 5.0, 5.0, 8.0}};
    CHECK_THROWS_AS(evball::evaluate_detections(dets, outside), std::runtime_error);
    const std::vector<GtCircle> gt = {{0, 5.0, 5.0, 8.0}};
    CHECK_THROWS_AS(evball::evaluate_detections({}, gt), std::runtime_error);
}

TEST_CASE("radius-free detections are excluded from IoU only") {
    std::vector<CircleDetection> dets;
    std::vector<GtCircle> gt;
    for (int i = 0; i <= 4; ++i) {
        dets.push_back(det(i * 1000, 50.0, 50.0, 0.0));  // centers only
        gt.push_back({i * 1000, 50.0, 50.0, 9.0});
    }
    const auto ev = evball::evaluate_detections(dets, gt);
    CHECK(ev.n_matched == 5);
    CHECK(ev.n_iou == 0);
    CHECK(ev.mean_iou == 0.0);
    CHECK(ev.mean_pixel_error == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("update rate is detections per second") {
    CHECK(evball::update_rate(100, 0.5) == Catch::Approx(200.0));
    CHECK(evball::update_rate(0, 1.0) == 0.0);
    CHECK_THROWS_AS(evball::update_rate(10, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(evball::update_rate(10, -1.0), std::invalid_argument);
}

TEST_CASE("3d point evaluation interpolates the truth states") {
    std::vector<GtState> gt;
    for (int i = 0; i <= 10; ++i) {
        GtState st;
        st.t = i * 1'000'000;
        st.p = {0.1 * i, 0.0, 1.0};
        st.v = {100.0, 0.0, 0.0};
        st.w = {0.0, 0.0, 0.0};
        gt.push_back(st);
    }

    std::vector<evball::TimedPoint> pts;
    pts.push_back({500'000, {0.05, 0.0, 1.0}});   // between samples, on the line
    pts.push_back({2'000'000, {0.2, 0.0, 1.0}});  // exact sample
    pts.push_back({3'000'000, {0.3, 0.4, 1.0}});  // 0.4 m off in y
    pts.push_back({99'000'000, {0.0, 0.0, 0.0}}); // outside the span

    const auto ev = evball::evaluate_points(pts, gt);
    CHECK(ev.n_evaluated == 3);
    CHECK(ev.n_outside == 1);
    CHECK(ev.mean_error_m == Catch::Approx(0.4 / 3.0).margin(1e-12));
    CHECK(ev.median_error_m == Catch::Approx(0.0).margin(1e-12));
    CHECK(ev.rmse_m == Catch::Approx(0.4 / std::sqrt(3.0)).margin(1e-12));

    const std::vector<GtState> one(1);
    CHECK_THROWS_AS(evball::evaluate_points(pts, one), std::invalid_argument);
}
