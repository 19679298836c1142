// Detector output types and detection CSV I/O.
#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "evball/event.hpp"

namespace evball {

// A detected ball circle. Median-filter detections carry no radius and use
// r = 0. score is the fraction of supported perimeter, in [0,1].
struct CircleDetection {
    double cx = 0, cy = 0;
    double r = 0;
    double score = 0;
    std::int64_t t = 0;
    std::string camera_id;
};

// Square search window, center (cx,cy) and half-width in pixels.
struct Roi {
    double cx = 0, cy = 0;
    std::int32_t half = 0;

    struct Rect {
        std::int32_t x0, y0, x1, y1;  // inclusive
        bool empty() const { return x1 < x0 || y1 < y0; }
        std::int32_t width() const { return x1 - x0 + 1; }
        std::int32_t height() const { return y1 - y0 + 1; }
    };

    Rect clamped(std::int32_t width, std::int32_t height) const {
        const auto c = static_cast<std::int32_t>(std::lround(cx));
        const auto d = static_cast<std::int32_t>(std::lround(cy));
        return Rect{std::max(c - half, 0), std::max(d - half, 0),
                    std::min(c + half, width - 1), std::min(d + half, height - 1)};
    }

    bool contains(std::int32_t x, std::int32_t y) const {
        const auto c = static_cast<std::int32_t>(std::lround(cx));
        const auto d = static_cast<std::int32_t>(std::lround(cy));
        return x >= c - half && x <= c + half && y >= d - half && y <= d + half;
    }
};

inline void write_detections_csv(const std::vector<CircleDetection>& dets,
                                 const std::string& path) {
    std::string out = "t_ns,camera_id,cx,cy,r,score\n";
    char buf[192];
    for (const auto& d : dets) {
        const int len =
            std::snprintf(buf, sizeof(buf), "%lld,%s,%.9g,%.9g,%.9g,%.9g\n",
                          static_cast<long long>(d.t), d.camera_id.c_str(), d.cx, d.cy, d.r,
                          d.score);
        out.append(buf, static_cast<std::size_t>(len));
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error(path + ": cannot open for writing");
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw std::runtime_error(path + ": write failed");
}

inline std::vector<CircleDetection> read_detections_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error(path + ": cannot open");
    std::vector<CircleDetection> dets;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(f, line)) {
        ++line_no;
        if (line_no == 1 || line.empty()) continue;
        CircleDetection d;
        char id[128] = {0};
        long long t = 0;
        if (std::sscanf(line.c_str(), "%lld,%127[^,],%lg,%lg,%lg,%lg", &t, id, &d.cx, &d.cy,
                        &d.r, &d.score) != 6)
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": malformed record");
        d.t = t;
        d.camera_id = id;
        dets.push_back(std::move(d));
    }
    return dets;
}

}  // namespace evball
