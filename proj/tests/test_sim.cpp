#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "evball/camera.hpp"
#include "evball/sim.hpp"

using evball::CameraModel;
using evball::SimConfig;

namespace {

SimConfig quiet_scene() {
    SimConfig cfg = evball::default_scene();
    cfg.noise_rate_hz = 0;
    cfg.contrast_event_density = 0;
    return cfg;
}

CameraModel axis_camera() {
    return CameraModel("cam", 640, 640, 1000, 1000, 320, 320,
                       Eigen::Matrix3d::Identity(), Eigen::Vector3d::Zero());
}

}  // namespace

TEST_CASE("ground truth follows the ballistic parabola without drag") {
    SimConfig cfg = quiet_scene();
    cfg.ball.k_d = 0;
    cfg.ball.k_m = 0;
    cfg.launch.p = {0, 0, 2};
    cfg.launch.v = {1.0, 0.5, 0};
    cfg.launch.w = {0, 0, 0};
    cfg.duration_s = 0.5;
    cfg.table_height_m = -10;  // do not stop early

    const auto res = evball::simulate(cfg);
    REQUIRE(res.gt.states.size() > 100);
    for (const auto& st : res.gt.states) {
        const double t = static_cast<double>(st.t) * 1e-9;
        const Eigen::Vector3d expect =
            cfg.launch.p + t * cfg.launch.v + 0.5 * t * t * cfg.ball.g;
        CHECK((st.p - expect).norm() < 1e-10);
        CHECK((st.v - (cfg.launch.v + t * cfg.ball.g)).norm() < 1e-10);
        CHECK((st.w - cfg.launch.w).norm() == 0.0);
    }
}

TEST_CASE("drag bleeds horizontal speed") {
    SimConfig cfg = quiet_scene();
    cfg.ball.k_m = 0;
    cfg.launch.p = {0, 0, 1};
    cfg.launch.v = {5, 0, 0};
    cfg.launch.w = {0, 0, 0};
    cfg.duration_s = 0.3;
    cfg.table_height_m = -10;

    const auto res = evball::simulate(cfg);
    const auto& st = res.gt.states;
    REQUIRE(st.size() > 10);
    for (std::size_t i = 1; i < st.size(); ++i) CHECK(st[i].v.x() < st[i - 1].v.x());
    CHECK(st.back().v.x() > 0);
}

TEST_CASE("magnus force bends the path sideways") {
    SimConfig cfg = quiet_scene();
    cfg.ball.k_d = 0;
    cfg.launch.p = {0, 0, 1};
    cfg.launch.v = {4, 0, 0};
    cfg.launch.w = {0, 0, 100};  // w x v points along +y
    cfg.duration_s = 0.3;
    cfg.table_height_m = -10;

    const auto res = evball::simulate(cfg);
    const auto& last = res.gt.states.back();
    CHECK(last.v.y() > 0.01);
    CHECK(last.p.y() > 0.001);
}

TEST_CASE("rollout stops when the ball reaches the table") {
    SimConfig cfg = quiet_scene();  // default launch arcs down onto z = 0
    const auto res = evball::simulate(cfg);
    const auto& st = res.gt.states;
    CHECK(st.back().p.z() <= cfg.table_height_m);
    for (std::size_t i = 0; i + 1 < st.size(); ++i) CHECK(st[i].p.z() > cfg.table_height_m);
    CHECK(st.back().t < std::llround(cfg.duration_s * 1e9));
}

TEST_CASE("projected circle has the pinhole radius") {
    const CameraModel cam = axis_camera();
    const auto c = evball::detail::project_circle(cam, {0, 0, 2}, 0.02);
    REQUIRE(c.valid);
    CHECK(c.cx == Catch::Approx(320.0));
    CHECK(c.cy == Catch::Approx(320.0));
    CHECK(c.r == Catch::Approx(10.0));  // fx * r / z = 1000 * 0.02 / 2

    CHECK_FALSE(evball::detail::project_circle(cam, {0, 0, -1}, 0.02).valid);
    CHECK_FALSE(evball::detail::project_circle(cam, {0, 0, 0.015}, 0.02).valid);
}

TEST_CASE("contrast events hug the projected circle boundary") {
    SimConfig cfg = evball::default_scene();
    cfg.noise_rate_hz = 0;
    cfg.contrast_event_density = 4;
    cfg.duration_s = 0.3;
    cfg.table_height_m = -10;

    const auto res = evball::simulate(cfg);
    REQUIRE(res.events.size() == 2);

    std::size_t total = 0;
    for (std::size_t ci = 0; ci < res.events.size(); ++ci) {
        const auto& cam = cfg.cameras[ci];
        const auto& circles = res.gt.circles.at(cam.id());
        REQUIRE(circles.size() == res.gt.states.size());

        std::int64_t prev_t = 0;
        std::size_t j = 0;
        for (const auto& e : res.events[ci]) {
            CHECK(e.t >= prev_t);  // streams are time sorted
            prev_t = e.t;
            CHECK(static_cast<int>(e.x) < cam.width());
            CHECK(static_cast<int>(e.y) < cam.height());
            CHECK((e.p == 1 || e.p == -1));

            while (j + 1 < circles.size() && circles[j + 1].t <= e.t) ++j;
            REQUIRE(j + 1 < circles.size());
            const auto& a = circles[j];
            const auto& b = circles[j + 1];
            const double f = static_cast<double>(e.t - a.t) / static_cast<double>(b.t - a.t);
            const double cx = a.cx + f * (b.cx - a.cx);
            const double cy = a.cy + f * (b.cy - a.cy);
            const double r = a.r + f * (b.r - a.r);
            const double dist = std::hypot(e.x - cx, e.y - cy);
            CHECK(std::abs(dist - r) <= 1.5);
        }
        total += res.events[ci].size();
    }
    CHECK(total > 10'000);
}

TEST_CASE("a static scene emits no contrast events") {
    SimConfig cfg = evball::default_scene();
    cfg.noise_rate_hz = 0;
    cfg.contrast_event_density = 4;
    cfg.duration_s = 0.05;
    cfg.ball.g = {0, 0, 0};
    cfg.launch.p = {0, 0, 0.35};
    cfg.launch.v = {0, 0, 0};
    cfg.launch.w = {0, 0, 0};

    const auto res = evball::simulate(cfg);
    for (const auto& stream : res.events) CHECK(stream.empty());
}

TEST_CASE("equal seeds reproduce streams exactly; different seeds do not") {
    SimConfig cfg = evball::default_scene();
    cfg.contrast_event_density = 2;
    cfg.noise_rate_hz = 1000;
    cfg.duration_s = 0.1;
    cfg.seed = 77;

    const auto r1 = evball::simulate(cfg);
    const auto r2 = evball::simulate(cfg);
    REQUIRE(r1.events.size() == r2.events.size());
    for (std::size_t ci = 0; ci < r1.events.size(); ++ci) {
        const auto& a = r1.events[ci];
        const auto& b = r2.events[ci];
        REQUIRE(a.size() == b.size());
        for (std::size_t i = 0; i < a.size(); ++i) {
            CHECK(a[i].t == b[i].t);
            CHECK(a[i].x == b[i].x);
            CHECK(a[i].y == b[i].y);
            CHECK(a[i].p == b[i].p);
        }
    }

    cfg.seed = 78;
    const auto r3 = evball::simulate(cfg);
    bool same = r3.events[0].size() == r1.events[0].size();
    if (same)
        for (std::size_t i = 0; i < r3.events[0].size() && same; ++i)
            same = r3.events[0][i].t == r1.events[0][i].t &&
                   r3.events[0][i].x == r1.events[0][i].x &&
                   r3.events[0][i].y == r1.events[0][i].y;
    CHECK_FALSE(same);
}

TEST_CASE("background noise is uniform in space and calibrated in rate") {
    SimConfig cfg = evball::default_scene();
    cfg.cameras.erase(cfg.cameras.begin() + 1, cfg.cameras.end());
    cfg.contrast_event_density = 0;  // noise only
    cfg.noise_rate_hz = 1e4;
    cfg.duration_s = 0.5;
    cfg.table_height_m = -10;
    cfg.seed = 5;

    const auto res = evball::simulate(cfg);
    const auto& ev = res.events[0];
    const double n = static_cast<double>(ev.size());
    CHECK(n > 4500);
    CHECK(n < 5500);

    // Chi-square uniformity over an 8x8 grid: under uniformity the statistic
    // stays below the 99th percentile of chi2 with 63 dof.
    double grid[8][8] = {};
    std::size_t n_pos = 0;
    for (const auto& e : ev) {
        grid[e.y * 8 / 720][e.x * 8 / 1280] += 1;
        if (e.p > 0) ++n_pos;
    }
    const double expect = n / 64.0;
    double chi2 = 0;
    for (const auto& row : grid)
        for (double o : row) chi2 += (o - expect) * (o - expect) / expect;
    CHECK(chi2 < 92.01);

    const double pos_frac = static_cast<double>(n_pos) / n;
    CHECK(pos_frac > 0.4);
    CHECK(pos_frac < 0.6);
}

TEST_CASE("event count scales linearly with contrast density") {
    SimConfig cfg = evball::default_scene();
    cfg.cameras.erase(cfg.cameras.begin() + 1, cfg.cameras.end());
    cfg.noise_rate_hz = 0;
    cfg.duration_s = 0.2;
    cfg.table_height_m = -10;

    cfg.contrast_event_density = 4;
    const double n4 = static_cast<double>(evball::simulate(cfg).events[0].size());
    cfg.contrast_event_density = 8;
    const double n8 = static_cast<double>(evball::simulate(cfg).events[0].size());
    REQUIRE(n4 > 1000);
    const double ratio = n8 / n4;
    CHECK(ratio > 1.8);
    CHECK(ratio < 2.2);
}

TEST_CASE("simulate validates its configuration") {
    SimConfig cfg = evball::default_scene();
    cfg.cameras.clear();
    CHECK_THROWS_AS(evball::simulate(cfg), std::invalid_argument);
    cfg = evball::default_scene();
    cfg.sim_dt_s = 0;
    CHECK_THROWS_AS(evball::simulate(cfg), std::invalid_argument);
    cfg = evball::default_scene();
    cfg.duration_s = -1;
    CHECK_THROWS_AS(evball::simulate(cfg), std::invalid_argument);
}

TEST_CASE("sim config parses from JSON with defaults") {
    nlohmann::json j;
    j["seed"] = 9;
    j["duration_s"] = 0.25;
    j["contrast_event_density"] = 2.5;
    j["format"] = "binary";
    j["launch"] = {{"p", {1.0, 2.0, 3.0}}, {"w", {0.0, -30.0, 0.0}}};
    j["ball"] = {{"radius", 0.019}};

    const SimConfig cfg = evball::sim_config_from_json(j);
    CHECK(cfg.seed == 9);
    CHECK(cfg.duration_s == 0.25);
    CHECK(cfg.contrast_event_density == 2.5);
    CHECK(cfg.format == evball::FileFormat::binary);
    CHECK(cfg.launch.p.x() == 1.0);
    CHECK(cfg.launch.w.y() == -30.0);
    CHECK(cfg.launch.v.x() == Catch::Approx(3.620773));  // default kept
    CHECK(cfg.ball.radius == 0.019);
    CHECK(cfg.cameras.size() == 2);  // default rig kept

    j["format"] = "text";
    CHECK_THROWS_AS(evball::sim_config_from_json(j), std::runtime_error);
    j["format"] = "csv";
    j["ball"] = {{"mass", -1.0}};
    CHECK_THROWS_AS(evball::sim_config_from_json(j), std::runtime_error);
    j["ball"] = {{"g", {1.0, 2.0}}};
    CHECK_THROWS_AS(evball::sim_config_from_json(j), std::runtime_error);
}

TEST_CASE("ground truth round-trips through JSON") {
    SimConfig cfg = quiet_scene();
    cfg.duration_s = 0.02;
    const auto res = evball::simulate(cfg);

    const auto back = evball::gt_from_json(evball::gt_to_json(res.gt));
    REQUIRE(back.states.size() == res.gt.states.size());
    CHECK(back.states.front().t == res.gt.states.front().t);
    CHECK((back.states.back().p - res.gt.states.back().p).norm() == 0.0);
    CHECK((back.states.back().w - res.gt.states.back().w).norm() == 0.0);
    REQUIRE(back.circles.size() == res.gt.circles.size());
    const auto& c0 = res.gt.circles.at("cam_a");
    const auto& c1 = back.circles.at("cam_a");
    REQUIRE(c1.size() == c0.size());
    CHECK(c1.back().cx == c0.back().cx);
    CHECK(c1.back().r == c0.back().r);
}
