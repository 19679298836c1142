// Particle-filter baseline.
//
// Particles carry circle hypotheses (x, y, r). Each step diffuses them,
// weights them by the fraction of perimeter arc bins that received events
// inside an annulus around the hypothesized circle, and resizes the next
// event window so the expected event count per step stays near a target.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "evball/detection.hpp"
#include "evball/event.hpp"
#include "evball/rng.hpp"

namespace evball {

struct ParticleConfig {
    int n_particles = 500;
    // Diffusion must out-run the target's per-window drift (a few px at
    // hundreds of Hz) or the filter falls back onto the trailing edge.
    double sigma_xy = 6.0;
    double sigma_r = 0.4;
    double annulus_px = 3.0;     // full annulus width around the perimeter
    int n_arc_bins = 36;
    double ess_frac = 0.5;       // resample when ESS < ess_frac * N
    // Events per window needed for a stable annulus likelihood; the resulting
    // ~0.5-1 kHz update rate matches how this tracker family is normally run.
    double target_events = 256.0;
    std::int64_t w_min_ns = 100'000;
    std::int64_t w_max_ns = 4'000'000;
    double r_min = 4.0;
    double r_max = 20.0;
};

struct Particle {
    double x = 0, y = 0, r = 0;
    double w = 0;
};

class ParticleFilter {
public:
    ParticleFilter(const ParticleConfig& cfg, std::uint64_t seed)
        : cfg_(cfg), rng_(seed), window_(cfg.w_min_ns * 4) {}

    // Uniform spread over the ROI box and the radius range.
    void init(const Roi& roi, std::int64_t initial_window_ns) {
        particles_.resize(cfg_.n_particles);
        for (auto& p : particles_) {
            p.x = uniform(rng_, roi.cx - roi.half, roi.cx + roi.half);
            p.y = uniform(rng_, roi.cy - roi.half, roi.cy + roi.half);
            p.r = uniform(rng_, cfg_.r_min, cfg_.r_max);
            p.w = 1.0 / cfg_.n_particles;
        }
        window_ = initial_window_ns;
        initialized_ = true;
    }

    bool initialized() const { return initialized_; }
    std::int64_t window_ns() const { return window_; }
    const std::vector<Particle>& particles() const { return particles_; }

    // One filter step over the events of the current window. window_end
    // stamps the estimate. Returns nothing when the weights degenerate.
    std::optional<CircleDetection> step(std::span<const Event> events, std::int64_t window_end) {
        diffuse();

        // Sequential importance weights: carry the previous posterior weight
        // and multiply by this window's annulus-support likelihood, so mass
        // concentrates on consistently supported hypotheses even between
        // resampling events.
        double w_sum = 0;
        like_.resize(particles_.size());
        std::vector<std::uint64_t> bins((cfg_.n_arc_bins + 63) / 64);
        for (std::size_t i = 0; i < particles_.size(); ++i) {
            auto& p = particles_[i];
            std::fill(bins.begin(), bins.end(), 0);
            const double half = cfg_.annulus_px * 0.5;
            int occupied = 0;
            for (const Event& e : events) {
                const double dx = e.x - p.x, dy = e.y - p.y;
                const double dist = std::sqrt(dx * dx + dy * dy);
                if (std::abs(dist - p.r) > half) continue;
                const double ang = std::atan2(dy, dx) + std::numbers::pi;
                auto b = static_cast<int>(ang * cfg_.n_arc_bins / (2.0 * std::numbers::pi));
                if (b >= cfg_.n_arc_bins) b = cfg_.n_arc_bins - 1;
                const std::uint64_t bit = 1ULL << (b % 64);
                if (!(bins[b / 64] & bit)) {
                    bins[b / 64] |= bit;
                    ++occupied;
                }
            }
            like_[i] = static_cast<double>(occupied) / cfg_.n_arc_bins;
            p.w *= like_[i];
            w_sum += p.w;
        }

        adapt_window(events.size());

        if (w_sum <= 0.0) {
            // Degenerate: nothing matched. Spread out and withhold the estimate.
            for (auto& p : particles_) p.w = 1.0 / cfg_.n_particles;
            diffuse();
            return std::nullopt;
        }

        double est_x = 0, est_y = 0, est_r = 0, support = 0, ess_den = 0;
        for (std::size_t i = 0; i < particles_.size(); ++i) {
            auto& p = particles_[i];
            const double wn = p.w / w_sum;
            support += wn * like_[i];  // weighted mean occupied fraction, in [0,1]
            p.w = wn;
            est_x += wn * p.x;
            est_y += wn * p.y;
            est_r += wn * p.r;
            ess_den += wn * wn;
        }

        if (1.0 / ess_den < cfg_.ess_frac * cfg_.n_particles) resample();

        CircleDetection det;
        det.cx = est_x;
        det.cy = est_y;
        det.r = est_r;
        det.score = support;
        det.t = window_end;
        return det;
    }

private:
    void diffuse() {
        for (auto& p : particles_) {
            p.x += normal(rng_, 0.0, cfg_.sigma_xy);
            p.y += normal(rng_, 0.0, cfg_.sigma_xy);
            p.r = std::clamp(p.r + normal(rng_, 0.0, cfg_.sigma_r), cfg_.r_min, cfg_.r_max);
        }
    }

    void resample() {
        const int n = cfg_.n_particles;
        std::vector<Particle> next(n);
        const double step = 1.0 / n;
        double u = uniform01(rng_) * step;
        double cum = particles_[0].w;
        int i = 0;
        for (int j = 0; j < n; ++j) {
            const double target = u + j * step;
            while (cum < target && i + 1 < n) cum += particles_[++i].w;
            next[j] = particles_[i];
            next[j].w = step;
        }
        particles_ = std::move(next);
    }

    void adapt_window(std::size_t observed) {
        if (observed == 0) {  // target/0 -> infinity, clamped at the ceiling
            window_ = cfg_.w_max_ns;
            return;
        }
        const double scaled =
            static_cast<double>(window_) * cfg_.target_events / static_cast<double>(observed);
        window_ = std::clamp(static_cast<std::int64_t>(std::llround(scaled)), cfg_.w_min_ns,
                             cfg_.w_max_ns);
    }

    ParticleConfig cfg_;
    std::vector<Particle> particles_;
    std::vector<double> like_;
    std::mt19937_64 rng_;
    std::int64_t window_;
    bool initialized_ = false;
};

}  // namespace evball
