// Synthetic event-stream generator with ground truth.
//
// A ball trajectory is rolled out with the flight model, projected into
// each camera, and turned into contrast events along the moving circle
// boundary: the boundary is split into angular bins, each bin produces a
// Poisson-distributed number of events proportional to how far the edge
// moved along its outward normal during the step, and polarity follows
// whether the disk is locally expanding or receding. Uniform background
// noise is superimposed. All randomness comes from hand-rolled samplers
// on seeded generators, so equal seeds give identical byte-level output
// on any platform.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "evball/camera.hpp"
#include "evball/event.hpp"
#include "evball/event_io.hpp"
#include "evball/flight.hpp"
#include "evball/rng.hpp"
#include "json.hpp"

namespace evball {

struct LaunchState {
    Eigen::Vector3d p = {-0.8, 0.0, 0.30};
    Eigen::Vector3d v = {3.620773, 0.0, 1.7};  // 4 m/s launch speed
    Eigen::Vector3d w = {0.0, -60.0, 0.0};
};

struct SimConfig {
    std::uint64_t seed = 1;
    double duration_s = 0.6;
    double sim_dt_s = 2e-4;
    double contrast_event_density = 4.0;  // events per pixel of boundary motion
    double noise_rate_hz = 1000.0;        // uniform background, per camera
    double table_height_m = 0.0;
    bool bright_ball = true;
    FileFormat format = FileFormat::csv;
    LaunchState launch;
    BallParams ball;
    std::vector<CameraModel> cameras;
};

struct GtState {
    std::int64_t t = 0;
    Eigen::Vector3d p, v, w;
};

struct GtCircle {
    std::int64_t t = 0;
    double cx = 0, cy = 0, r = 0;
};

struct GroundTruth {
    std::vector<GtState> states;
    std::map<std::string, std::vector<GtCircle>> circles;
};

struct SimResult {
    GroundTruth gt;
    std::vector<StreamHeader> headers;         // one per camera
    std::vector<std::vector<Event>> events;    // one stream per camera
};

inline Eigen::Vector3d vec3_from_json(const nlohmann::json& a, const char* name) {
    const auto v = a.get<std::vector<double>>();
    if (v.size() != 3)
        throw std::runtime_error(std::string(name) + " must hold 3 values");
    return {v[0], v[1], v[2]};
}

inline BallParams ball_from_json(const nlohmann::json& b) {
    BallParams ball;
    if (b.contains("mass")) ball.mass = b["mass"].get<double>();
    if (b.contains("radius")) ball.radius = b["radius"].get<double>();
    if (b.contains("k_d")) ball.k_d = b["k_d"].get<double>();
    if (b.contains("k_m")) ball.k_m = b["k_m"].get<double>();
    if (b.contains("g")) ball.g = vec3_from_json(b["g"], "ball g");
    if (ball.mass <= 0 || ball.radius <= 0 || ball.k_d < 0)
        throw std::runtime_error("ball params: mass, radius must be > 0 and k_d >= 0");
    return ball;
}

inline BallParams read_ball_params(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
    return ball_from_json(j);
}

inline SimConfig default_scene() {
    SimConfig cfg;
    const Eigen::Vector3d target(0, 0, 0.35);
    const Eigen::Vector3d up(0, 0, 1);
    cfg.cameras.push_back(CameraModel::look_at("cam_a", 1280, 720, 900, 900, 640, 360,
                                               {0.0, -1.15, 0.85}, target, up));
    cfg.cameras.push_back(CameraModel::look_at("cam_b", 1280, 720, 900, 900, 640, 360,
                                               {0.0, 1.15, 0.85}, target, up));
    return cfg;
}

namespace detail {

struct ProjectedCircle {
    double cx, cy, r;
    bool valid;
};

inline ProjectedCircle project_circle(const CameraModel& cam, const Eigen::Vector3d& p,
                                      double ball_radius) {
    const Eigen::Vector3d pc = cam.to_camera(p);
    if (pc.z() <= ball_radius) return {0, 0, 0, false};
    const double inv_z = 1.0 / pc.z();
    return {cam.fx() * pc.x() * inv_z + cam.cx(), cam.fy() * pc.y() * inv_z + cam.cy(),
            cam.fx() * ball_radius * inv_z, true};
}

}  // namespace detail

inline SimResult simulate(const SimConfig& cfg) {
    if (cfg.cameras.empty()) throw std::invalid_argument("sim: no cameras configured");
    if (cfg.sim_dt_s <= 0) throw std::invalid_argument("sim: sim_dt_s must be > 0");
    if (cfg.duration_s <= 0) throw std::invalid_argument("sim: duration_s must be > 0");

    SimResult res;
    const std::int64_t dt_ns = std::llround(cfg.sim_dt_s * 1e9);
    const std::int64_t duration_ns = std::llround(cfg.duration_s * 1e9);

    // Trajectory rollout.
    State9 s;
    s.segment<3>(0) = cfg.launch.p;
    s.segment<3>(3) = cfg.launch.v;
    s.segment<3>(6) = cfg.launch.w;
    res.gt.states.push_back({0, cfg.launch.p, cfg.launch.v, cfg.launch.w});
    std::int64_t t = 0;
    while (t + dt_ns <= duration_ns) {
        s = rk4_step(s, cfg.sim_dt_s, cfg.ball);
        t += dt_ns;
        res.gt.states.push_back({t, s.segment<3>(0), s.segment<3>(3), s.segment<3>(6)});
        if (s(2) <= cfg.table_height_m) break;
    }

    const auto& states = res.gt.states;
    for (std::size_t ci = 0; ci < cfg.cameras.size(); ++ci) {
        const CameraModel& cam = cfg.cameras[ci];
        res.headers.push_back({cam.width(), cam.height(), cam.id()});
        auto& circles = res.gt.circles[cam.id()];
        auto& events = res.events.emplace_back();

        std::mt19937_64 contrast_rng(substream_seed(cfg.seed, 2 * ci));
        std::mt19937_64 noise_rng(substream_seed(cfg.seed, 2 * ci + 1));

        std::vector<detail::ProjectedCircle> proj(states.size());
        for (std::size_t i = 0; i < states.size(); ++i) {
            proj[i] = detail::project_circle(cam, states[i].p, cfg.ball.radius);
            if (proj[i].valid) circles.push_back({states[i].t, proj[i].cx, proj[i].cy, proj[i].r});
        }

        // Contrast events on the moving boundary.
        for (std::size_t i = 0; i + 1 < states.size(); ++i) {
            const auto& a = proj[i];
            const auto& b = proj[i + 1];
            if (!a.valid || !b.valid) continue;
            const double dcx = b.cx - a.cx, dcy = b.cy - a.cy, dr = b.r - a.r;
            const int n_bins = std::max(8, static_cast<int>(std::ceil(
                                               2.0 * std::numbers::pi * std::max(a.r, 1.0))));
            const std::int64_t t0 = states[i].t;
            const std::int64_t span = states[i + 1].t - t0;
            for (int bin = 0; bin < n_bins; ++bin) {
                const double theta = (bin + 0.5) * 2.0 * std::numbers::pi / n_bins;
                const double nx = std::cos(theta), ny = std::sin(theta);
                const double edge_motion = dcx * nx + dcy * ny + dr;
                const double lambda = cfg.contrast_event_density * std::abs(edge_motion);
                const int count = poisson(contrast_rng, lambda);
                for (int n = 0; n < count; ++n) {
                    const double f = uniform01(contrast_rng);
                    const double ex = a.cx + f * dcx + (a.r + f * dr) * nx;
                    const double ey = a.cy + f * dcy + (a.r + f * dr) * ny;
                    const long px = std::lround(ex), py = std::lround(ey);
                    if (px < 0 || px >= cam.width() || py < 0 || py >= cam.height()) continue;
                    Event e;
                    e.t = t0 + static_cast<std::int64_t>(f * static_cast<double>(span));
                    e.x = static_cast<std::uint16_t>(px);
                    e.y = static_cast<std::uint16_t>(py);
                    const bool brighter = (edge_motion > 0) == cfg.bright_ball;
                    e.p = brighter ? 1 : -1;
                    events.push_back(e);
                }
            }
        }

        // Uniform background noise over the whole recording.
        if (cfg.noise_rate_hz > 0) {
            const std::int64_t t_end = states.back().t;
            double tn = exponential(noise_rng, cfg.noise_rate_hz) * 1e9;
            while (static_cast<std::int64_t>(tn) <= t_end) {
                Event e;
                e.t = static_cast<std::int64_t>(tn);
                e.x = static_cast<std::uint16_t>(uniform_int(noise_rng, 0, cam.width() - 1));
                e.y = static_cast<std::uint16_t>(uniform_int(noise_rng, 0, cam.height() - 1));
                e.p = uniform_int(noise_rng, 0, 1) == 0 ? -1 : 1;
                events.push_back(e);
                tn += exponential(noise_rng, cfg.noise_rate_hz) * 1e9;
            }
        }

        std::stable_sort(events.begin(), events.end(),
                         [](const Event& l, const Event& r) { return l.t < r.t; });
    }
    return res;
}

inline nlohmann::json gt_to_json(const GroundTruth& gt) {
    nlohmann::json root;
    auto& states = root["states"] = nlohmann::json::array();
    for (const auto& st : gt.states) {
        states.push_back({{"t", st.t},
                          {"p", {st.p.x(), st.p.y(), st.p.z()}},
                          {"v", {st.v.x(), st.v.y(), st.v.z()}},
                          {"w", {st.w.x(), st.w.y(), st.w.z()}}});
    }
    auto& cams = root["cameras"] = nlohmann::json::object();
    for (const auto& [id, circles] : gt.circles) {
        auto& arr = cams[id] = nlohmann::json::array();
        for (const auto& c : circles)
            arr.push_back({{"t", c.t}, {"cx", c.cx}, {"cy", c.cy}, {"r", c.r}});
    }
    return root;
}

inline GroundTruth gt_from_json(const nlohmann::json& root) {
    GroundTruth gt;
    for (const auto& j : root.at("states")) {
        GtState st;
        st.t = j.at("t").get<std::int64_t>();
        const auto p = j.at("p").get<std::vector<double>>();
        const auto v = j.at("v").get<std::vector<double>>();
        const auto w = j.at("w").get<std::vector<double>>();
        if (p.size() != 3 || v.size() != 3 || w.size() != 3)
            throw std::runtime_error("ground truth: state vectors must hold 3 values");
        st.p = {p[0], p[1], p[2]};
        st.v = {v[0], v[1], v[2]};
        st.w = {w[0], w[1], w[2]};
        gt.states.push_back(st);
    }
    if (root.contains("cameras"))
        for (const auto& [id, arr] : root.at("cameras").items())
            for (const auto& j : arr)
                gt.circles[id].push_back({j.at("t").get<std::int64_t>(),
                                          j.at("cx").get<double>(), j.at("cy").get<double>(),
                                          j.at("r").get<double>()});
    return gt;
}

inline void write_gt(const std::string& path, const GroundTruth& gt) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << gt_to_json(gt).dump() << '\n';
}

inline GroundTruth read_gt(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open: " + path);
    nlohmann::json root;
    try {
        in >> root;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
    return gt_from_json(root);
}

inline SimConfig sim_config_from_json(const nlohmann::json& j) {
    SimConfig cfg = default_scene();
    if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("duration_s")) cfg.duration_s = j["duration_s"].get<double>();
    if (j.contains("sim_dt_s")) cfg.sim_dt_s = j["sim_dt_s"].get<double>();
    if (j.contains("contrast_event_density"))
        cfg.contrast_event_density = j["contrast_event_density"].get<double>();
    if (j.contains("noise_rate_hz")) cfg.noise_rate_hz = j["noise_rate_hz"].get<double>();
    if (j.contains("table_height_m")) cfg.table_height_m = j["table_height_m"].get<double>();
    if (j.contains("bright_ball")) cfg.bright_ball = j["bright_ball"].get<bool>();
    if (j.contains("format")) {
        const auto f = j["format"].get<std::string>();
        if (f == "csv")
            cfg.format = FileFormat::csv;
        else if (f == "binary")
            cfg.format = FileFormat::binary;
        else
            throw std::runtime_error("sim config: format must be \"csv\" or \"binary\"");
    }
    if (j.contains("launch")) {
        const auto& l = j["launch"];
        if (l.contains("p")) cfg.launch.p = vec3_from_json(l["p"], "launch.p");
        if (l.contains("v")) cfg.launch.v = vec3_from_json(l["v"], "launch.v");
        if (l.contains("w")) cfg.launch.w = vec3_from_json(l["w"], "launch.w");
    }
    if (j.contains("ball")) cfg.ball = ball_from_json(j["ball"]);
    if (j.contains("cameras")) cfg.cameras = calib_from_json(j);
    return cfg;
}

inline SimConfig read_sim_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
    return sim_config_from_json(j);
}

}  // namespace evball
