// Command-line front end: simulate, run, eval, predict, bench.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "CLI11.hpp"
#include "evball/evball.hpp"

namespace fs = std::filesystem;
using namespace evball;

namespace {

std::string rate_label(double r) {
    if (r == std::floor(r) && r > 0 && r < 1e15)
        return std::to_string(static_cast<long long>(r));
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", r);
    return buf;
}

void write_json_file(const fs::path& path, const nlohmann::json& j) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
    out << j.dump(2) << '\n';
}

void cmd_sim(const std::string& config_path, const std::string& out_dir) {
    SimConfig cfg = config_path.empty() ? default_scene() : read_sim_config(config_path);
    const SimResult res = simulate(cfg);
    fs::create_directories(out_dir);
    const fs::path dir(out_dir);
    const char* ext = cfg.format == FileFormat::csv ? ".csv" : ".evb";
    for (std::size_t i = 0; i < res.headers.size(); ++i) {
        const fs::path f = dir / ("events_" + res.headers[i].camera_id + ext);
        write_events(res.headers[i], res.events[i], f.string(), cfg.format);
    }
    write_gt((dir / "gt.json").string(), res.gt);
    write_calib((dir / "calib.json").string(), cfg.cameras);
    std::size_t total = 0;
    for (const auto& ev : res.events) total += ev.size();
    std::printf("wrote %zu camera streams, %zu events, %zu truth states to %s\n",
                res.headers.size(), total, res.gt.states.size(), out_dir.c_str());
}

void cmd_run(const std::string& events_a, const std::string& events_b,
             const std::string& calib_path, const std::string& detector, int deterministic_n,
             const std::string& out_dir) {
    PipelineInput a, b;
    std::tie(a.header, a.events) = read_events(events_a, infer_format(events_a));
    std::tie(b.header, b.events) = read_events(events_b, infer_format(events_b));

    auto cams = read_calib(calib_path);
    std::vector<CameraModel> ordered;
    for (const auto& hdr : {a.header, b.header}) {
        auto it = std::find_if(cams.begin(), cams.end(),
                               [&](const CameraModel& c) { return c.id() == hdr.camera_id; });
        if (it == cams.end())
            throw std::runtime_error("no calibration for camera: " + hdr.camera_id);
        ordered.push_back(*it);
    }

    PipelineConfig cfg;
    cfg.detector = detector_from_string(detector);
    if (deterministic_n > 0) {
        cfg.mode = PipelineMode::deterministic;
        cfg.deterministic_stride = deterministic_n;
    }

    const PipelineResult res = run_pipeline(a, b, ordered, cfg);

    fs::create_directories(out_dir);
    const fs::path dir(out_dir);
    write_detections_csv(res.detections, (dir / "detections.csv").string());
    write_triangulated_csv(res.points, (dir / "triangulated.csv").string());
    // Wall-clock numbers would break byte-identical reruns, so only the
    // realtime mode reports them.
    if (cfg.mode == PipelineMode::realtime)
        write_json_file(dir / "timings.json", timings_to_json(res.timings));
    std::printf("%zu detections, %zu triangulated points -> %s\n", res.detections.size(),
                res.points.size(), out_dir.c_str());
}

void cmd_eval(const std::string& dets_path, const std::string& gt_path,
              const std::string& out_path) {
    const auto dets = read_detections_csv(dets_path);
    const auto gt = read_gt(gt_path);

    nlohmann::json out;
    auto& cams = out["cameras"] = nlohmann::json::object();
    for (const auto& [cam_id, circles] : gt.circles) {
        std::vector<CircleDetection> mine;
        for (const auto& d : dets)
            if (d.camera_id == cam_id) mine.push_back(d);
        if (mine.empty()) continue;
        const auto ev = evaluate_detections(mine, circles);
        const double span_s =
            static_cast<double>(circles.back().t - circles.front().t) * 1e-9;
        cams[cam_id] = {{"mean_pixel_error", ev.mean_pixel_error},
                        {"stddev_pixel_error", ev.stddev_pixel_error},
                        {"mean_iou", ev.mean_iou},
                        {"stddev_iou", ev.stddev_iou},
                        {"n_matched", ev.n_matched},
                        {"n_unmatched", ev.n_unmatched},
                        {"n_iou", ev.n_iou},
                        {"update_rate_hz",
                         span_s > 0 ? update_rate(mine.size(), span_s) : 0.0}};
    }
    if (cams.empty()) throw std::runtime_error("no detections matched any truth camera");
    write_json_file(out_path, out);
    std::printf("wrote %s\n", out_path.c_str());
}

void cmd_predict(const std::string& obs_path, const std::string& rates_str,
                 const std::string& ball_path, int em_iters, const std::string& out_dir) {
    const auto obs = read_obs_csv(obs_path);
    const BallParams ball = ball_path.empty() ? BallParams{} : read_ball_params(ball_path);

    std::vector<double> rates;
    std::stringstream ss(rates_str);
    std::string tok;
    while (std::getline(ss, tok, ','))
        if (!tok.empty()) rates.push_back(std::stod(tok));
    if (rates.empty()) throw std::runtime_error("no rates given");

    fs::create_directories(out_dir);
    const fs::path dir(out_dir);
    for (double rate : rates) {
        const auto res = run_rate_study(obs, rate, ball, em_iters);
        const std::string label = rate_label(rate);
        write_predictions_csv(res.samples, (dir / ("predictions_" + label + ".csv")).string());
        write_errors_csv(res.samples, (dir / ("errors_" + label + ".csv")).string());
        write_ekf_params((dir / ("ekf_params_" + label + ".json")).string(), res.params);
        std::printf("rate %s: %zu samples, final log-likelihood %.6g\n", label.c_str(),
                    res.samples.size(), res.em_loglik.back());
    }
}

void cmd_bench(const std::string& events_path, int k_eros) {
    const auto [hdr, events] = read_events(events_path, infer_format(events_path));
    if (events.empty()) throw std::runtime_error("event file is empty");

    using Clock = std::chrono::steady_clock;
    ErosSurface eros(hdr.width, hdr.height, k_eros);
    std::size_t applied = 0;
    const auto t0 = Clock::now();
    // Repeat passes on short files so the measurement covers >= 1M updates.
    while (applied < 1'000'000 ||
           Clock::now() - t0 < std::chrono::milliseconds(200)) {
        for (const Event& e : events) eros.update(e);
        applied += events.size();
        if (Clock::now() - t0 > std::chrono::seconds(20)) break;
    }
    const double elapsed_s = std::chrono::duration<double>(Clock::now() - t0).count();
    const double rate = static_cast<double>(applied) / elapsed_s;

    Image8 img = eros.snapshot();
    HoughConfig hough;
    HoughWorkspace ws;
    auto time_detect = [&](const std::optional<Roi>& roi, int reps) {
        std::vector<double> us(reps);
        for (int i = 0; i < reps; ++i) {
            const auto a = Clock::now();
            hough_detect(img, hough, roi, ws);
            us[i] = std::chrono::duration<double, std::micro>(Clock::now() - a).count();
        }
        return median_of(us);
    };
    const double full_us = time_detect(std::nullopt, 20);
    const auto det = hough_detect(img, hough, std::nullopt, ws);
    const Roi roi{det ? det->cx : hdr.width / 2.0, det ? det->cy : hdr.height / 2.0,
                  static_cast<std::int32_t>(std::lround(3.0 * hough.r_max))};
    const double roi_us = time_detect(roi, 200);

    nlohmann::json j = {{"events", events.size()},
                        {"k_eros", k_eros},
                        {"eros_events_per_s", rate},
                        {"hough_full_us", full_us},
                        {"hough_roi_us", roi_us},
                        {"roi_speedup", full_us / roi_us}};
    std::cout << j.dump(2) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"event-camera ball tracking pipeline"};
    app.require_subcommand(1);

    auto* sim = app.add_subcommand("sim", "generate synthetic event streams with ground truth");
    std::string sim_config, sim_out;
    sim->add_option("--config", sim_config, "scene config JSON (default scene when omitted)");
    sim->add_option("--out-dir", sim_out, "output directory")->required();

    auto* run = app.add_subcommand("run", "run the detection + triangulation pipeline");
    std::string run_a, run_b, run_calib, run_detector = "eros_hough", run_out;
    int run_det_n = 0;
    run->add_option("--events-a", run_a, "camera A event file")->required();
    run->add_option("--events-b", run_b, "camera B event file")->required();
    run->add_option("--calib", run_calib, "calibration JSON")->required();
    run->add_option("--detector", run_detector, "eros_hough | median | particle")
        ->check(CLI::IsMember({"eros_hough", "median", "particle"}));
    run->add_option("--deterministic", run_det_n,
                    "deterministic mode: detect every N kept events");
    run->add_option("--out", run_out, "output directory")->required();

    auto* eval = app.add_subcommand("eval", "score detections against ground truth");
    std::string eval_dets, eval_gt, eval_out;
    eval->add_option("--dets", eval_dets, "detections CSV")->required();
    eval->add_option("--gt", eval_gt, "ground-truth JSON")->required();
    eval->add_option("--out", eval_out, "output JSON")->required();

    auto* predict = app.add_subcommand("predict", "rate study: filter fit and uncertainty");
    std::string pred_obs, pred_rates = "4000,149", pred_ball, pred_out;
    int pred_iters = 8;
    predict->add_option("--obs", pred_obs, "3D observations CSV")->required();
    predict->add_option("--rates", pred_rates, "comma-separated rates in Hz");
    predict->add_option("--ball", pred_ball, "ball parameters JSON");
    predict->add_option("--em-iters", pred_iters, "EM iterations per rate");
    predict->add_option("--out", pred_out, "output directory")->required();

    auto* bench = app.add_subcommand("bench", "surface throughput and detector latency");
    std::string bench_events;
    int bench_k = 10;
    bench->add_option("--events", bench_events, "event file")->required();
    bench->add_option("--k-eros", bench_k, "surface decay half-width");

    try {
        app.parse(argc, argv);
        if (sim->parsed()) cmd_sim(sim_config, sim_out);
        if (run->parsed()) cmd_run(run_a, run_b, run_calib, run_detector, run_det_n, run_out);
        if (eval->parsed()) cmd_eval(eval_dets, eval_gt, eval_out);
        if (predict->parsed()) cmd_predict(pred_obs, pred_rates, pred_ball, pred_iters, pred_out);
        if (bench->parsed()) cmd_bench(bench_events, bench_k);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return e.get_exit_code() == 0 ? 1 : e.get_exit_code();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
