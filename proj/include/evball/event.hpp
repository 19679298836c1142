// Core event-camera data model.
#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace evball {

// One camera event. Timestamps are integer nanoseconds; polarity is
// strictly -1 or +1.
struct Event {
    std::int64_t t = 0;   // ns
    std::uint16_t x = 0;  // column
    std::uint16_t y = 0;  // row
    std::int16_t p = 1;   // polarity, -1 or +1

    friend bool operator==(const Event&, const Event&) = default;
};

static_assert(sizeof(Event) == 16);

struct StreamHeader {
    std::int32_t width = 0;
    std::int32_t height = 0;
    std::string camera_id;

    friend bool operator==(const StreamHeader&, const StreamHeader&) = default;
};

inline void validate_header(const StreamHeader& h) {
    if (h.width < 1 || h.height < 1)
        throw std::runtime_error("stream header: width and height must be >= 1");
    if (h.camera_id.empty()) throw std::runtime_error("stream header: camera_id must be non-empty");
}

inline bool in_bounds(const Event& e, const StreamHeader& h) {
    return e.x < h.width && e.y < h.height;
}

inline bool valid_polarity(const Event& e) { return e.p == 1 || e.p == -1; }

}  // namespace evball
