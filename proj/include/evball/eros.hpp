// Exponential Reduced Ordinal Surface.
//
// Each incoming event multiplicatively decays the (2k+1)x(2k+1) cell
// neighborhood around its pixel and then sets its own cell to 255, giving a
// velocity-robust edge image that downstream detectors can sample at any
// time. Decay is floor(value * d) with d = 0.3^(1/k), applied through a
// 256-entry lookup table; polarity is ignored.
#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <mutex>
#include <stdexcept>
#include <vector>

#include "evball/event.hpp"
#include "evball/image.hpp"

namespace evball {

class ErosSurface {
public:
    ErosSurface(std::int32_t width, std::int32_t height, std::int32_t k_eros = 10)
        : width_(width), height_(height), k_(k_eros) {
        if (width < 1 || height < 1) throw std::invalid_argument("eros: bad dimensions");
        if (k_eros < 1) throw std::invalid_argument("eros: k_eros must be >= 1");
        d_ = std::pow(0.3, 1.0 / static_cast<double>(k_eros));
        for (int v = 0; v < 256; ++v)
            decay_lut_[v] = static_cast<std::uint8_t>(std::floor(v * d_));
        cells_.assign(static_cast<std::size_t>(width) * height, 0);
    }

    void update(const Event& e) {
        if (e.x >= width_ || e.y >= height_)
            throw std::out_of_range("eros: event outside surface bounds");
        const std::int32_t x0 = e.x >= k_ ? e.x - k_ : 0;
        const std::int32_t x1 = e.x + k_ < width_ ? e.x + k_ : width_ - 1;
        const std::int32_t y0 = e.y >= k_ ? e.y - k_ : 0;
        const std::int32_t y1 = e.y + k_ < height_ ? e.y + k_ : height_ - 1;
        for (std::int32_t y = y0; y <= y1; ++y) {
            std::uint8_t* row = cells_.data() + static_cast<std::size_t>(y) * width_;
            for (std::int32_t x = x0; x <= x1; ++x) row[x] = decay_lut_[row[x]];
        }
        cells_[static_cast<std::size_t>(e.y) * width_ + e.x] = 255;
        last_event_t_ = e.t;
    }

    Image8 snapshot() const {
        Image8 img(width_, height_);
        std::memcpy(img.data.data(), cells_.data(), cells_.size());
        return img;
    }

    void snapshot_into(Image8& img) const {
        if (img.width != width_ || img.height != height_) img.resize(width_, height_);
        std::memcpy(img.data.data(), cells_.data(), cells_.size());
    }

    std::int32_t width() const { return width_; }
    std::int32_t height() const { return height_; }
    std::int32_t k_eros() const { return k_; }
    double decay() const { return d_; }
    std::int64_t last_event_t() const { return last_event_t_; }
    std::uint8_t value(std::int32_t x, std::int32_t y) const {
        return cells_[static_cast<std::size_t>(y) * width_ + x];
    }
    const std::vector<std::uint8_t>& cells() const { return cells_; }

private:
    std::int32_t width_, height_, k_;
    double d_;
    std::int64_t last_event_t_ = 0;
    std::uint8_t decay_lut_[256];
    std::vector<std::uint8_t> cells_;
};

// Surface shared between one writer context (update) and any number of
// snapshot readers. Readers get an internally coherent copy; the writer is
// blocked at most for the duration of one copy.
class SharedErosSurface {
public:
    SharedErosSurface(std::int32_t width, std::int32_t height, std::int32_t k_eros = 10)
        : surface_(width, height, k_eros) {}

    void update(const Event& e) {
        std::lock_guard lock(mutex_);
        surface_.update(e);
    }

    // Copies the surface and reports the timestamp of the last applied
    // event, taken at the same instant as the copy.
    std::int64_t snapshot_into(Image8& img) const {
        std::lock_guard lock(mutex_);
        surface_.snapshot_into(img);
        return surface_.last_event_t();
    }

    Image8 snapshot() const {
        std::lock_guard lock(mutex_);
        return surface_.snapshot();
    }

    std::int32_t width() const { return surface_.width(); }
    std::int32_t height() const { return surface_.height(); }
    std::int32_t k_eros() const { return surface_.k_eros(); }

private:
    mutable std::mutex mutex_;
    ErosSurface surface_;
};

}  // namespace evball
