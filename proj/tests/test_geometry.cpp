#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "evball/camera.hpp"
#include "evball/detection.hpp"
#include "evball/pairing.hpp"
#include "evball/rng.hpp"
#include "evball/triangulate.hpp"

namespace {

evball::CameraModel identity_cam() {
    return evball::CameraModel("c", 640, 640, 500, 500, 320, 320,
                               Eigen::Matrix3d::Identity(), Eigen::Vector3d::Zero());
}

// Stereo rig looking at a desk-scale workspace, 3 m baseline.
struct Rig {
    evball::CameraModel a, b;
};

Rig make_rig() {
    const Eigen::Vector3d target(0, 0, 0.3);
    const Eigen::Vector3d up(0, 0, 1);
    return {evball::CameraModel::look_at("cam_a", 1280, 720, 900, 900, 640, 360,
                                         {-1.5, -2.6, 0.8}, target, up),
            evball::CameraModel::look_at("cam_b", 1280, 720, 900, 900, 640, 360,
                                         {1.5, -2.6, 0.8}, target, up)};
}

}  // namespace

TEST_CASE("projection on the optical axis hits the principal point") {
    const auto cam = identity_cam();
    const auto px = cam.project({0, 0, 2});
    CHECK(px.u == Catch::Approx(320.0).margin(1e-12));
    CHECK(px.v == Catch::Approx(320.0).margin(1e-12));
}

TEST_CASE("projection offsets scale with focal length over depth") {
    const auto cam = identity_cam();
    const auto px = cam.project({0.1, 0, 2});
    CHECK(px.u == Catch::Approx(345.0).margin(1e-12));  // 500 * 0.1 / 2
    CHECK(px.v == Catch::Approx(320.0).margin(1e-12));
}

TEST_CASE("projecting a point behind the camera throws") {
    const auto cam = identity_cam();
    CHECK_THROWS_AS(cam.project({0, 0, -1}), std::domain_error);
    CHECK_THROWS_AS(cam.project({0, 0, 0}), std::domain_error);
}

TEST_CASE("camera constructor validates intrinsics and rotation") {
    const Eigen::Matrix3d I = Eigen::Matrix3d::Identity();
    const Eigen::Vector3d z = Eigen::Vector3d::Zero();
    CHECK_THROWS_AS(evball::CameraModel("c", 0, 480, 500, 500, 320, 240, I, z),
                    std::invalid_argument);
    CHECK_THROWS_AS(evball::CameraModel("c", 640, 480, 0, 500, 320, 240, I, z),
                    std::invalid_argument);
    Eigen::Matrix3d reflect = I;
    reflect(0, 0) = -1;  // det -1
    CHECK_THROWS_AS(evball::CameraModel("c", 640, 480, 500, 500, 320, 240, reflect, z),
                    std::invalid_argument);
    Eigen::Matrix3d skewed = I;
    skewed(0, 1) = 0.01;  // not orthonormal
    CHECK_THROWS_AS(evball::CameraModel("c", 640, 480, 500, 500, 320, 240, skewed, z),
                    std::invalid_argument);
}

TEST_CASE("look_at places the optical center at the camera position") {
    const auto rig = make_rig();
    CHECK((rig.a.center() - Eigen::Vector3d(-1.5, -2.6, 0.8)).norm() < 1e-12);
    CHECK((rig.b.center() - Eigen::Vector3d(1.5, -2.6, 0.8)).norm() < 1e-12);
    // The target projects onto the principal point.
    const auto px = rig.a.project({0, 0, 0.3});
    CHECK(px.u == Catch::Approx(640.0).margin(1e-9));
    CHECK(px.v == Catch::Approx(360.0).margin(1e-9));
    CHECK_THROWS_AS(
        evball::CameraModel::look_at("c", 640, 480, 500, 500, 320, 240, {0, 0, 1}, {0, 0, 2},
                                     {0, 0, 1}),  // up parallel to view axis
        std::invalid_argument);
}

TEST_CASE("ray_direction inverts project") {
    const auto rig = make_rig();
    const Eigen::Vector3d p(0.5, 1.0, 0.8);
    const auto px = rig.a.project(p);
    const Eigen::Vector3d dir = rig.a.ray_direction(px.u, px.v);
    const Eigen::Vector3d to_point = (p - rig.a.center()).normalized();
    CHECK((dir - to_point).norm() < 1e-12);
}

TEST_CASE("noise-free triangulation recovers the point") {
    const auto rig = make_rig();
    const Eigen::Vector3d p(0.5, 1.0, 0.8);
    const auto res =
        evball::triangulate_midpoint(rig.a, rig.a.project(p), rig.b, rig.b.project(p));
    CHECK((res.point - p).norm() < 1e-9);
    CHECK(res.residual < 1e-9);
}

TEST_CASE("triangulation round trip over random in-frustum points") {
    const auto rig = make_rig();
    std::mt19937_64 rng(11);
    for (int i = 0; i < 1000; ++i) {
        const Eigen::Vector3d p(evball::uniform(rng, -0.6, 0.8),
                                evball::uniform(rng, -0.5, 1.2),
                                evball::uniform(rng, 0.1, 1.1));
        const auto res =
            evball::triangulate_midpoint(rig.a, rig.a.project(p), rig.b, rig.b.project(p));
        REQUIRE((res.point - p).norm() < 1e-9);
    }
}

TEST_CASE("triangulation is symmetric in its camera arguments") {
    const auto rig = make_rig();
    const Eigen::Vector3d p(0.2, 0.4, 0.6);
    const auto pa = rig.a.project(p);
    const auto pb = rig.b.project(p);
    const auto ab = evball::triangulate_midpoint(rig.a, pa, rig.b, pb);
    const auto ba = evball::triangulate_midpoint(rig.b, pb, rig.a, pa);
    CHECK((ab.point - ba.point).norm() < 1e-12);
}

TEST_CASE("half-pixel noise keeps median 3D error under 10 mm at 3 m") {
    const auto rig = make_rig();
    std::mt19937_64 rng(7);
    std::vector<double> errs;
    for (int i = 0; i < 1000; ++i) {
        const Eigen::Vector3d p(evball::uniform(rng, -0.5, 0.5),
                                evball::uniform(rng, -0.3, 0.7),
                                evball::uniform(rng, 0.1, 0.9));
        auto pa = rig.a.project(p);
        auto pb = rig.b.project(p);
        pa.u += evball::normal(rng, 0.0, 0.5);
        pa.v += evball::normal(rng, 0.0, 0.5);
        pb.u += evball::normal(rng, 0.0, 0.5);
        pb.v += evball::normal(rng, 0.0, 0.5);
        const auto res = evball::triangulate_midpoint(rig.a, pa, rig.b, pb);
        errs.push_back((res.point - p).norm());
    }
    std::nth_element(errs.begin(), errs.begin() + errs.size() / 2, errs.end());
    CHECK(errs[errs.size() / 2] < 0.010);
}

TEST_CASE("parallel rays are rejected") {
    // Identical poses: the two back-projected rays coincide.
    const auto cam = identity_cam();
    CHECK_THROWS_AS(evball::triangulate_midpoint(cam, {320, 320}, cam, {320, 320}),
                    std::domain_error);
}

TEST_CASE("pair_streams interpolates the denser stream") {
    using evball::CircleDetection;
    // Stream A is sparser, so it keeps its timestamps (the §IV rule).
    const std::vector<CircleDetection> a = {{50.0, 40.0, 8, 1, 500'000, "cam_a"}};
    const std::vector<CircleDetection> b = {{100.0, 60.0, 8, 1, 0, "cam_b"},
                                            {110.0, 64.0, 8, 1, 1'000'000, "cam_b"}};
    const auto pairs = evball::pair_streams(a, b);
    REQUIRE(pairs.size() == 1);
    CHECK(pairs[0].t == 500'000);
    CHECK(pairs[0].a.u == Catch::Approx(50.0));
    CHECK(pairs[0].a.v == Catch::Approx(40.0));
    CHECK(pairs[0].b.u == Catch::Approx(105.0));
    CHECK(pairs[0].b.v == Catch::Approx(62.0));
}

TEST_CASE("pairs with a bracketing gap beyond max_gap are dropped") {
    using evball::CircleDetection;
    const std::vector<CircleDetection> a = {{50, 40, 8, 1, 2'500'000, "cam_a"}};
    const std::vector<CircleDetection> b = {{100, 60, 8, 1, 0, "cam_b"},
                                            {110, 64, 8, 1, 5'000'000, "cam_b"}};
    CHECK(evball::pair_streams(a, b, 2'000'000).empty());
    CHECK(evball::pair_streams(a, b, 5'000'000).size() == 1);
}

TEST_CASE("identical timestamps pair as the identity matching") {
    using evball::CircleDetection;
    std::vector<CircleDetection> a, b;
    for (int i = 0; i < 5; ++i) {
        a.push_back({10.0 + i, 20.0, 8, 1, i * 1'000'000, "cam_a"});
        b.push_back({30.0 + i, 40.0, 8, 1, i * 1'000'000, "cam_b"});
    }
    const auto pairs = evball::pair_streams(a, b);
    REQUIRE(pairs.size() == 5);
    for (int i = 0; i < 5; ++i) {
        CHECK(pairs[i].t == i * 1'000'000);
        // Interpolation at an existing sample returns that sample exactly.
        CHECK(pairs[i].a.u == 10.0 + i);
        CHECK(pairs[i].b.u == 30.0 + i);
    }
}

TEST_CASE("pairing with an empty stream yields nothing") {
    using evball::CircleDetection;
    const std::vector<CircleDetection> a = {{50, 40, 8, 1, 0, "cam_a"}};
    CHECK(evball::pair_streams(a, {}).empty());
    CHECK(evball::pair_streams({}, a).empty());
    CHECK(evball::pair_streams({}, {}).empty());
}

TEST_CASE("base-stream samples outside the dense span are dropped") {
    using evball::CircleDetection;
    const std::vector<CircleDetection> a = {{1, 1, 8, 1, 0, "cam_a"},
                                            {2, 2, 8, 1, 10'000'000, "cam_a"}};
    const std::vector<CircleDetection> b = {{5, 5, 8, 1, 4'000'000, "cam_b"},
                                            {6, 6, 8, 1, 5'000'000, "cam_b"},
                                            {7, 7, 8, 1, 6'000'000, "cam_b"}};
    // a's samples at 0 and 10 ms precede/follow every b sample: no pairs.
    CHECK(evball::pair_streams(a, b).empty());
}

TEST_CASE("calibration JSON round trips") {
    const auto rig = make_rig();
    const std::vector<evball::CameraModel> cams = {rig.a, rig.b};
    const auto back = evball::calib_from_json(evball::calib_to_json(cams));
    REQUIRE(back.size() == 2);
    for (int i = 0; i < 2; ++i) {
        CHECK(back[i].id() == cams[i].id());
        CHECK((back[i].rotation() - cams[i].rotation()).norm() < 1e-15);
        CHECK((back[i].translation() - cams[i].translation()).norm() < 1e-15);
        CHECK(back[i].fx() == cams[i].fx());
    }
}

TEST_CASE("calibration with nonzero distortion is rejected") {
    auto j = evball::calib_to_json({identity_cam()});
    j["cameras"][0]["dist"] = std::vector<double>{0.1, 0, 0, 0, 0};
    CHECK_THROWS_AS(evball::calib_from_json(j), std::runtime_error);
}
