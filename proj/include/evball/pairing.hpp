// Temporal pairing of two detection streams.
//
// Detection threads on the two cameras run unsynchronized, so their
// timestamps never line up exactly. The sparser stream keeps its
// timestamps and the denser stream is linearly interpolated to them,
// but only when the bracketing pair is close enough in time to make
// interpolation meaningful.
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "evball/camera.hpp"
#include "evball/detection.hpp"

namespace evball {

struct PairedObservation {
    std::int64_t t = 0;
    Pixel a, b;  // pixel centers in camera A and camera B
};

// Both inputs must be sorted by timestamp. On equal stream lengths,
// stream A keeps its timestamps.
inline std::vector<PairedObservation> pair_streams(std::span<const CircleDetection> a,
                                                   std::span<const CircleDetection> b,
                                                   std::int64_t max_gap_ns = 20'000'000) {
    const bool a_is_base = a.size() <= b.size();
    const auto base = a_is_base ? a : b;
    const auto dense = a_is_base ? b : a;

    std::vector<PairedObservation> out;
    if (base.empty() || dense.empty()) return out;
    out.reserve(base.size());

    std::size_t hi = 0;
    for (const auto& d : base) {
        while (hi < dense.size() && dense[hi].t < d.t) ++hi;
        if (hi >= dense.size()) break;  // no later sample to bracket with
        Pixel interp;
        if (dense[hi].t == d.t) {
            interp = {dense[hi].cx, dense[hi].cy};
        } else {
            if (hi == 0) continue;  // d.t precedes the dense stream
            const auto& lo_det = dense[hi - 1];
            const auto& hi_det = dense[hi];
            if (hi_det.t - lo_det.t > max_gap_ns) continue;
            const double f =
                static_cast<double>(d.t - lo_det.t) / static_cast<double>(hi_det.t - lo_det.t);
            interp = {lo_det.cx + f * (hi_det.cx - lo_det.cx),
                      lo_det.cy + f * (hi_det.cy - lo_det.cy)};
        }
        PairedObservation po;
        po.t = d.t;
        po.a = a_is_base ? Pixel{d.cx, d.cy} : interp;
        po.b = a_is_base ? interp : Pixel{d.cx, d.cy};
        out.push_back(po);
    }
    return out;
}

}  // namespace evball
