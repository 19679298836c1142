// End-to-end two-camera pipeline.
//
// Realtime mode replays each stream at sensor pace on an ingestion thread
// (trail filter, then surface update or window buffering) while a
// free-running detection thread per camera consumes the latest state, and
// a pairing context triangulates matched detections as they arrive. The
// detector never blocks ingestion and ingestion never waits for the
// detector, so each side runs at its own rate.
//
// Deterministic mode runs the same stages single-threaded with a fixed
// detection cadence and batch pairing, producing byte-identical outputs
// for equal inputs. Timing numbers are still collected but outputs that
// must be reproducible should not include them.
#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <deque>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <type_traits>
#include <vector>

#include <Eigen/Dense>

#include "evball/blob.hpp"
#include "evball/camera.hpp"
#include "evball/detection.hpp"
#include "evball/eros.hpp"
#include "evball/event.hpp"
#include "evball/median.hpp"
#include "evball/pairing.hpp"
#include "evball/particle.hpp"
#include "evball/rng.hpp"
#include "evball/tracker.hpp"
#include "evball/trail_filter.hpp"
#include "evball/triangulate.hpp"
#include "json.hpp"

namespace evball {

enum class DetectorKind { eros_hough, median, particle };
enum class PipelineMode { realtime, deterministic };

inline const char* to_string(DetectorKind k) {
    switch (k) {
        case DetectorKind::eros_hough: return "eros_hough";
        case DetectorKind::median: return "median";
        case DetectorKind::particle: return "particle";
    }
    return "?";
}

inline DetectorKind detector_from_string(const std::string& s) {
    if (s == "eros_hough") return DetectorKind::eros_hough;
    if (s == "median") return DetectorKind::median;
    if (s == "particle") return DetectorKind::particle;
    throw std::invalid_argument("unknown detector: " + s);
}

struct PipelineConfig {
    DetectorKind detector = DetectorKind::eros_hough;
    PipelineMode mode = PipelineMode::realtime;
    int deterministic_stride = 500;          // kept events per detection in deterministic mode
    std::int32_t k_eros = 10;
    std::int64_t dt_burst_ns = 1'000'000;
    TrackerConfig tracker;
    BlobConfig blob;
    std::int64_t blob_window_ns = 2'000'000;
    int baseline_miss_limit = 5;
    MedianConfig median;
    ParticleConfig particle;
    std::int64_t pf_initial_window_ns = 1'000'000;
    std::uint64_t seed = 7;                  // particle filter draws
    double speed = 1.0;                      // realtime replay factor, 1 = sensor pace
    std::int64_t pace_quantum_ns = 500'000;  // event-time slice per ingestion wakeup
    std::int64_t pair_max_gap_ns = 20'000'000;
};

struct StageStats {
    std::uint64_t init_calls = 0, steady_calls = 0;
    double init_ms = 0, steady_ms = 0;
};

struct StreamCounters {
    std::uint64_t events_read = 0;
    std::uint64_t events_kept = 0;     // survived the trail filter
    std::uint64_t events_applied = 0;  // delivered to the detector state
    std::uint64_t detections = 0;
};

struct PipelineTimings {
    std::map<std::string, StageStats> stages;
    std::map<std::string, StreamCounters> counters;
};

inline nlohmann::json timings_to_json(const PipelineTimings& t) {
    nlohmann::json j;
    auto& stages = j["stages"] = nlohmann::json::object();
    for (const auto& [name, s] : t.stages)
        stages[name] = {{"init_calls", s.init_calls},
                        {"init_ms", s.init_ms},
                        {"steady_calls", s.steady_calls},
                        {"steady_ms", s.steady_ms}};
    auto& counters = j["counters"] = nlohmann::json::object();
    for (const auto& [cam, c] : t.counters)
        counters[cam] = {{"events_read", c.events_read},
                         {"events_kept", c.events_kept},
                         {"events_applied", c.events_applied},
                         {"detections", c.detections}};
    return j;
}

struct TriangulatedPoint {
    std::int64_t t = 0;
    Eigen::Vector3d p = Eigen::Vector3d::Zero();
    double residual = 0;
};

inline void write_triangulated_csv(const std::vector<TriangulatedPoint>& pts,
                                   const std::string& path) {
    std::string out = "t_ns,x,y,z,residual\n";
    char buf[192];
    for (const auto& pt : pts) {
        const int len = std::snprintf(buf, sizeof(buf), "%lld,%.9g,%.9g,%.9g,%.9g\n",
                                      static_cast<long long>(pt.t), pt.p.x(), pt.p.y(),
                                      pt.p.z(), pt.residual);
        out.append(buf, static_cast<std::size_t>(len));
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error(path + ": cannot open for writing");
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw std::runtime_error(path + ": write failed");
}

inline std::vector<TriangulatedPoint> read_triangulated_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error(path + ": cannot open");
    std::vector<TriangulatedPoint> pts;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(f, line)) {
        ++line_no;
        if (line_no == 1 || line.empty()) continue;
        TriangulatedPoint pt;
        long long t = 0;
        if (std::sscanf(line.c_str(), "%lld,%lg,%lg,%lg,%lg", &t, &pt.p.x(), &pt.p.y(),
                        &pt.p.z(), &pt.residual) != 5)
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": malformed record");
        pt.t = t;
        pts.push_back(pt);
    }
    return pts;
}

struct PipelineInput {
    StreamHeader header;
    std::vector<Event> events;  // sorted by timestamp
};

struct PipelineResult {
    std::vector<CircleDetection> detections;  // both cameras, ordered by (t, camera_id)
    std::vector<TriangulatedPoint> points;
    PipelineTimings timings;
};

namespace detail {

using PipeClock = std::chrono::steady_clock;

struct StageAcc {
    std::map<std::string, StageStats> stages;

    void add(const char* name, bool steady, double ms) {
        auto& s = stages[name];
        if (steady) {
            ++s.steady_calls;
            s.steady_ms += ms;
        } else {
            ++s.init_calls;
            s.init_ms += ms;
        }
    }

    void merge_into(std::map<std::string, StageStats>& out) const {
        for (const auto& [name, s] : stages) {
            auto& o = out[name];
            o.init_calls += s.init_calls;
            o.init_ms += s.init_ms;
            o.steady_calls += s.steady_calls;
            o.steady_ms += s.steady_ms;
        }
    }
};

template <typename F>
auto timed(StageAcc& acc, const char* name, bool steady, F&& fn) {
    const auto t0 = PipeClock::now();
    if constexpr (std::is_void_v<std::invoke_result_t<F>>) {
        fn();
        acc.add(name, steady,
                std::chrono::duration<double, std::milli>(PipeClock::now() - t0).count());
    } else {
        auto r = fn();
        acc.add(name, steady,
                std::chrono::duration<double, std::milli>(PipeClock::now() - t0).count());
        return r;
    }
}

// Single-producer single-consumer handoff. Rates here are a few thousand
// items per second, so a lock per operation costs nothing measurable.
template <typename T>
class SpscQueue {
public:
    void push(T v) {
        std::lock_guard lock(m_);
        q_.push_back(std::move(v));
    }

    bool try_pop(T& out) {
        std::lock_guard lock(m_);
        if (q_.empty()) return false;
        out = std::move(q_.front());
        q_.pop_front();
        return true;
    }

    void close() {
        std::lock_guard lock(m_);
        closed_ = true;
    }

    // True only once the producer closed and everything was consumed.
    bool drained() {
        std::lock_guard lock(m_);
        return closed_ && q_.empty();
    }

private:
    std::mutex m_;
    std::deque<T> q_;
    bool closed_ = false;
};

// Window-sliced median or particle baseline fed one kept event at a time.
// Acquires its ROI from blob initialization, re-acquires after a run of
// empty windows.
class BaselineWorker {
public:
    BaselineWorker(DetectorKind kind, const PipelineConfig& cfg, const StreamHeader& hdr,
                   std::uint64_t pf_seed)
        : kind_(kind), cfg_(cfg), hdr_(hdr), pf_(cfg.particle, pf_seed) {}

    bool locked() const { return locked_; }

    template <typename Emit>
    void feed(const Event& e, StageAcc& acc, Emit&& emit) {
        if (roi_) {
            close_due_windows(e.t, acc, emit);
            if (roi_) {
                if (roi_->contains(e.x, e.y)) buf_.push_back(e);
                return;
            }
        }
        buf_.push_back(e);
        if (buf_.back().t - buf_.front().t < cfg_.blob_window_ns) return;
        auto roi = timed(acc, "blob_init", locked_, [&] {
            return blob_init(buf_, cfg_.blob_window_ns, hdr_, cfg_.blob);
        });
        if (roi) {
            roi_ = roi;
            misses_ = 0;
            if (kind_ == DetectorKind::particle) {
                pf_.init(*roi_, cfg_.pf_initial_window_ns);
                window_len_ = pf_.window_ns();
            } else {
                window_len_ = cfg_.median.window_ns;
            }
            window_end_ = e.t + window_len_;
            buf_.clear();
        } else {
            // Keep the recent half so the search window slides forward.
            buf_.erase(buf_.begin(), buf_.begin() + static_cast<std::ptrdiff_t>(buf_.size() / 2));
        }
    }

    // Closes the window in progress at end of stream.
    template <typename Emit>
    void finish(std::int64_t stream_end_t, StageAcc& acc, Emit&& emit) {
        if (roi_) close_due_windows(stream_end_t + window_len_, acc, emit);
    }

private:
    template <typename Emit>
    void close_due_windows(std::int64_t now_t, StageAcc& acc, Emit&& emit) {
        while (roi_ && now_t >= window_end_) {
            std::optional<CircleDetection> det;
            if (kind_ == DetectorKind::median) {
                auto fix = timed(acc, "median_update", locked_, [&] {
                    return median_detect(buf_, *roi_, window_end_, cfg_.median.min_events);
                });
                if (fix) det = CircleDetection{fix->x, fix->y, 0.0, 1.0, fix->t, {}};
            } else {
                det = timed(acc, "pf_update", locked_,
                            [&] { return pf_.step(buf_, window_end_); });
            }
            buf_.clear();
            if (det) {
                roi_->cx = det->cx;
                roi_->cy = det->cy;
                misses_ = 0;
                locked_ = true;
                emit(*det);
            } else if (++misses_ >= cfg_.baseline_miss_limit) {
                roi_.reset();
                break;
            }
            if (kind_ == DetectorKind::particle) window_len_ = pf_.window_ns();
            window_end_ += window_len_;
        }
    }

    DetectorKind kind_;
    const PipelineConfig& cfg_;
    StreamHeader hdr_;
    ParticleFilter pf_;
    std::optional<Roi> roi_;
    std::vector<Event> buf_;
    std::int64_t window_end_ = 0;
    std::int64_t window_len_ = 0;
    int misses_ = 0;
    bool locked_ = false;
};

struct CamShared {
    std::atomic<std::uint64_t> applied{0};
    std::atomic<bool> ingest_done{false};
    std::atomic<bool> locked{false};
    StreamCounters counters;
};

// Incremental pairing against stream A timestamps: each A detection is
// matched once B has a bracketing (or exact) sample around it.
class IncrementalPairer {
public:
    IncrementalPairer(const CameraModel& cam_a, const CameraModel& cam_b,
                      std::int64_t max_gap_ns)
        : cam_a_(cam_a), cam_b_(cam_b), max_gap_(max_gap_ns) {}

    void add_a(const CircleDetection& d) { a_.push_back(d); }
    void add_b(const CircleDetection& d) { b_.push_back(d); }

    void process(bool b_final, std::vector<TriangulatedPoint>& out) {
        while (ia_ < a_.size()) {
            const auto& base = a_[ia_];
            while (ib_ < b_.size() && b_[ib_].t < base.t) ++ib_;
            if (ib_ >= b_.size()) {
                if (!b_final) return;  // wait for more B detections
                ++ia_;
                continue;
            }
            Pixel pb;
            if (b_[ib_].t == base.t) {
                pb = {b_[ib_].cx, b_[ib_].cy};
            } else if (ib_ == 0) {
                ++ia_;
                continue;
            } else {
                const auto& lo = b_[ib_ - 1];
                const auto& hi = b_[ib_];
                if (hi.t - lo.t > max_gap_) {
                    ++ia_;
                    continue;
                }
                const double f =
                    static_cast<double>(base.t - lo.t) / static_cast<double>(hi.t - lo.t);
                pb = {lo.cx + f * (hi.cx - lo.cx), lo.cy + f * (hi.cy - lo.cy)};
            }
            try {
                const auto tri =
                    triangulate_midpoint(cam_a_, {base.cx, base.cy}, cam_b_, pb);
                out.push_back({base.t, tri.point, tri.residual});
            } catch (const std::domain_error&) {
                // Unpairable geometry; drop the sample.
            }
            ++ia_;
        }
    }

private:
    const CameraModel& cam_a_;
    const CameraModel& cam_b_;
    std::int64_t max_gap_;
    std::vector<CircleDetection> a_, b_;
    std::size_t ia_ = 0, ib_ = 0;
};

inline void merge_detections(std::vector<CircleDetection> a, std::vector<CircleDetection> b,
                             std::vector<CircleDetection>& out) {
    out.clear();
    out.reserve(a.size() + b.size());
    std::merge(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out),
               [](const CircleDetection& l, const CircleDetection& r) {
                   return l.t != r.t ? l.t < r.t : l.camera_id < r.camera_id;
               });
}

}  // namespace detail

inline PipelineResult run_pipeline(const PipelineInput& a, const PipelineInput& b,
                                   const std::vector<CameraModel>& calib,
                                   const PipelineConfig& cfg) {
    if (calib.size() != 2) throw std::invalid_argument("pipeline: expected 2 calibrated cameras");
    const PipelineInput* inputs[2] = {&a, &b};
    for (int i = 0; i < 2; ++i) {
        validate_header(inputs[i]->header);
        if (inputs[i]->header.camera_id != calib[i].id())
            throw std::invalid_argument("pipeline: stream/calibration camera id mismatch: " +
                                        inputs[i]->header.camera_id + " vs " + calib[i].id());
    }

    PipelineResult result;
    std::vector<CircleDetection> dets[2];
    detail::StageAcc accs[8];
    int n_accs = 0;

    if (cfg.mode == PipelineMode::deterministic) {
        for (int ci = 0; ci < 2; ++ci) {
            const auto& input = *inputs[ci];
            auto& acc = accs[n_accs++];
            auto& counters = result.timings.counters[input.header.camera_id];
            TrailFilter trail(input.header.width, input.header.height, cfg.dt_burst_ns);
            bool locked = false;
            auto emit = [&](CircleDetection d) {
                d.camera_id = input.header.camera_id;
                locked = true;
                ++counters.detections;
                dets[ci].push_back(std::move(d));
            };

            if (cfg.detector == DetectorKind::eros_hough) {
                ErosSurface eros(input.header.width, input.header.height, cfg.k_eros);
                Image8 img;
                TrackerState st;
                HoughWorkspace ws;
                int since_detect = 0;
                for (const Event& e : input.events) {
                    ++counters.events_read;
                    bool kept = false;
                    detail::timed(acc, "ingest", locked, [&] {
                        kept = trail.accept(e);
                        if (kept) eros.update(e);
                    });
                    if (!kept) continue;
                    ++counters.events_kept;
                    ++counters.events_applied;
                    if (++since_detect < cfg.deterministic_stride) continue;
                    since_detect = 0;
                    detail::timed(acc, "fetch_surface", locked, [&] { eros.snapshot_into(img); });
                    const bool full = st.mode == TrackerState::Mode::initializing;
                    auto det = detail::timed(acc, full ? "detect_full" : "detect_roi", locked,
                                             [&] { return track_step(st, img, cfg.tracker, ws); });
                    if (det) {
                        det->t = eros.last_event_t();
                        emit(*det);
                    }
                }
            } else {
                detail::BaselineWorker worker(cfg.detector, cfg, input.header,
                                              substream_seed(cfg.seed, ci));
                for (const Event& e : input.events) {
                    ++counters.events_read;
                    bool kept = false;
                    detail::timed(acc, "ingest", worker.locked(),
                                  [&] { kept = trail.accept(e); });
                    if (!kept) continue;
                    ++counters.events_kept;
                    ++counters.events_applied;
                    worker.feed(e, acc, emit);
                }
                if (!input.events.empty()) worker.finish(input.events.back().t, acc, emit);
            }
        }

        auto& acc = accs[n_accs++];
        detail::timed(acc, "pair_triangulate", true, [&] {
            const auto pairs = pair_streams(dets[0], dets[1], cfg.pair_max_gap_ns);
            for (const auto& pr : pairs) {
                try {
                    const auto tri = triangulate_midpoint(calib[0], pr.a, calib[1], pr.b);
                    result.points.push_back({pr.t, tri.point, tri.residual});
                } catch (const std::domain_error&) {
                }
            }
        });
    } else {
        detail::CamShared shared[2];
        detail::SpscQueue<std::vector<Event>> ev_queues[2];
        detail::SpscQueue<CircleDetection> det_queues[2];
        std::optional<SharedErosSurface> surfaces[2];
        if (cfg.detector == DetectorKind::eros_hough)
            for (int ci = 0; ci < 2; ++ci)
                surfaces[ci].emplace(inputs[ci]->header.width, inputs[ci]->header.height,
                                     cfg.k_eros);

        const auto wall0 = detail::PipeClock::now();
        std::vector<std::thread> threads;

        for (int ci = 0; ci < 2; ++ci) {
            threads.emplace_back([&, ci] {
                const auto& input = *inputs[ci];
                auto& acc = accs[ci];
                auto& sh = shared[ci];
                TrailFilter trail(input.header.width, input.header.height, cfg.dt_burst_ns);
                const bool use_eros = cfg.detector == DetectorKind::eros_hough;
                const std::size_t n = input.events.size();
                const std::int64_t t0 = n ? input.events.front().t : 0;
                std::size_t i = 0;
                std::vector<Event> chunk;
                while (i < n) {
                    const std::int64_t slice_end =
                        input.events[i].t + cfg.pace_quantum_ns -
                        (input.events[i].t - t0) % cfg.pace_quantum_ns;
                    const auto target =
                        wall0 + std::chrono::nanoseconds(std::llround(
                                    static_cast<double>(input.events[i].t - t0) / cfg.speed));
                    std::this_thread::sleep_until(target);
                    chunk.clear();
                    detail::timed(acc, "ingest", sh.locked.load(std::memory_order_relaxed), [&] {
                        while (i < n && input.events[i].t < slice_end) {
                            const Event& e = input.events[i];
                            ++sh.counters.events_read;
                            if (trail.accept(e)) {
                                ++sh.counters.events_kept;
                                if (use_eros)
                                    surfaces[ci]->update(e);
                                else
                                    chunk.push_back(e);
                                sh.applied.fetch_add(1, std::memory_order_release);
                                ++sh.counters.events_applied;
                            }
                            ++i;
                        }
                    });
                    if (!use_eros && !chunk.empty()) ev_queues[ci].push(chunk);
                }
                sh.ingest_done.store(true, std::memory_order_release);
                ev_queues[ci].close();
            });
        }

        for (int ci = 0; ci < 2; ++ci) {
            threads.emplace_back([&, ci] {
                const auto& input = *inputs[ci];
                auto& acc = accs[2 + ci];
                auto& sh = shared[ci];
                auto emit = [&](CircleDetection d) {
                    d.camera_id = input.header.camera_id;
                    sh.locked.store(true, std::memory_order_relaxed);
                    ++sh.counters.detections;
                    dets[ci].push_back(d);
                    det_queues[ci].push(std::move(d));
                };

                if (cfg.detector == DetectorKind::eros_hough) {
                    Image8 img;
                    TrackerState st;
                    HoughWorkspace ws;
                    std::uint64_t seen = 0;
                    bool locked = false;
                    for (;;) {
                        const bool done = sh.ingest_done.load(std::memory_order_acquire);
                        const std::uint64_t applied = sh.applied.load(std::memory_order_acquire);
                        if (applied == seen) {
                            if (done) break;
                            std::this_thread::sleep_for(std::chrono::microseconds(50));
                            continue;
                        }
                        seen = applied;
                        const std::int64_t t_surf = detail::timed(
                            acc, "fetch_surface", locked,
                            [&] { return surfaces[ci]->snapshot_into(img); });
                        const bool full = st.mode == TrackerState::Mode::initializing;
                        auto det =
                            detail::timed(acc, full ? "detect_full" : "detect_roi", locked,
                                          [&] { return track_step(st, img, cfg.tracker, ws); });
                        if (det) {
                            det->t = t_surf;
                            locked = true;
                            emit(*det);
                        }
                    }
                } else {
                    detail::BaselineWorker worker(cfg.detector, cfg, input.header,
                                                  substream_seed(cfg.seed, ci));
                    std::vector<Event> chunk;
                    std::int64_t last_t = 0;
                    for (;;) {
                        if (!ev_queues[ci].try_pop(chunk)) {
                            if (ev_queues[ci].drained()) break;
                            std::this_thread::sleep_for(std::chrono::microseconds(50));
                            continue;
                        }
                        for (const Event& e : chunk) {
                            worker.feed(e, acc, emit);
                            last_t = e.t;
                        }
                    }
                    worker.finish(last_t, acc, emit);
                }
                det_queues[ci].close();
            });
        }

        std::vector<TriangulatedPoint> points;
        threads.emplace_back([&] {
            auto& acc = accs[4];
            detail::IncrementalPairer pairer(calib[0], calib[1], cfg.pair_max_gap_ns);
            CircleDetection item;
            for (;;) {
                bool any = false;
                while (det_queues[0].try_pop(item)) {
                    pairer.add_a(item);
                    any = true;
                }
                while (det_queues[1].try_pop(item)) {
                    pairer.add_b(item);
                    any = true;
                }
                const bool b_done = det_queues[1].drained();
                if (any) {
                    detail::timed(acc, "pair_triangulate", true,
                                  [&] { pairer.process(b_done, points); });
                } else if (det_queues[0].drained() && b_done) {
                    detail::timed(acc, "pair_triangulate", true,
                                  [&] { pairer.process(true, points); });
                    break;
                } else {
                    std::this_thread::sleep_for(std::chrono::microseconds(100));
                }
            }
        });

        for (auto& th : threads) th.join();
        n_accs = 5;
        result.points = std::move(points);
        for (int ci = 0; ci < 2; ++ci)
            result.timings.counters[inputs[ci]->header.camera_id] = shared[ci].counters;
    }

    for (int i = 0; i < n_accs; ++i) accs[i].merge_into(result.timings.stages);
    detail::merge_detections(std::move(dets[0]), std::move(dets[1]), result.detections);
    return result;
}

}  // namespace evball
