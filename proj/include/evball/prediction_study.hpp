// Measurement-rate study: how observation rate affects state uncertainty.
//
// The same 3D observation sequence is subsampled to each requested rate,
// filter parameters are EM-fit per rate for a fair comparison, and the
// filter then runs over the subsampled sequence. Each step records the
// predicted (prior) state with the traces of its position, velocity, and
// spin covariance blocks, plus the gap between prediction/posterior and
// the measurement.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "evball/ekf.hpp"
#include "evball/em.hpp"
#include "evball/flight.hpp"

namespace evball {

// Bucket thinning: time is divided into 1/rate_hz buckets anchored at the
// first timestamp, and the first observation in each bucket is kept. Rates
// at or above the input rate keep everything.
inline std::vector<Measurement3> subsample_rate(std::span<const Measurement3> obs,
                                                double rate_hz) {
    if (rate_hz <= 0) throw std::invalid_argument("subsample: rate must be > 0");
    std::vector<Measurement3> out;
    if (obs.empty()) return out;
    const double period_ns = 1e9 / rate_hz;
    const std::int64_t t0 = obs.front().t;
    std::int64_t last_bucket = -1;
    for (const auto& ob : obs) {
        const auto bucket =
            static_cast<std::int64_t>(std::floor(static_cast<double>(ob.t - t0) / period_ns));
        if (bucket == last_bucket) continue;
        out.push_back(ob);
        last_bucket = bucket;
    }
    return out;
}

struct StudySample {
    std::int64_t t = 0;
    State9 m_pred = State9::Zero();   // prior mean at the measurement time
    double trace_p_pos = 0;
    double trace_p_vel = 0;
    double trace_p_spin = 0;
    double innovation_m = 0;          // |z - predicted position|
    double posterior_gap_m = 0;       // |z - filtered position|
};

struct RateStudyResult {
    double rate_hz = 0;
    EkfParams params;                 // EM-fit parameters used for the run
    std::vector<double> em_loglik;
    std::vector<StudySample> samples;
};

// Initial state guess from the first two observations; the spin prior is
// zero with a wide covariance.
inline EkfParams study_initial_params(std::span<const Measurement3> obs, double rate_hz) {
    if (obs.size() < 2) throw std::invalid_argument("study: need at least 2 observations");
    EkfParams p = EkfParams::defaults();
    // Q defaults are stated per the default dt_ref; rescale to this study's
    // reference step so the continuous-time noise density does not depend on
    // the measurement rate being studied.
    p.Q *= (1.0 / rate_hz) / p.dt_ref_s;
    p.dt_ref_s = 1.0 / rate_hz;
    p.mu0.segment<3>(0) = obs[0].z;
    const double dt = static_cast<double>(obs[1].t - obs[0].t) * 1e-9;
    if (dt > 0) {
        p.mu0.segment<3>(3) = (obs[1].z - obs[0].z) / dt;
        // The finite-difference velocity guess inherits 2*Rm/dt^2 of
        // measurement noise, which dwarfs the generic prior at high rates;
        // widen the velocity block so the prior stays honest.
        for (int i = 0; i < 3; ++i) p.P0(3 + i, 3 + i) += 2.0 * p.Rm(i, i) / (dt * dt);
    }
    return p;
}

// With fit_init=false the EM keeps the crude two-point initial guess from
// study_initial_params, so the filter has to earn its convergence from the
// measurements instead of starting at a smoothed estimate of the whole arc.
inline RateStudyResult run_rate_study(std::span<const Measurement3> obs, double rate_hz,
                                      const BallParams& ball, int em_iters = 8,
                                      bool fit_init = true) {
    RateStudyResult res;
    res.rate_hz = rate_hz;
    const auto sub = subsample_rate(obs, rate_hz);
    if (sub.size() < 10)
        throw std::invalid_argument("study: fewer than 10 measurements after subsampling");

    EmOptions opt;
    opt.max_iters = em_iters;
    opt.fit_init = fit_init;
    const auto em = em_fit(sub, study_initial_params(sub, rate_hz), ball, opt);
    res.params = em.params;
    res.em_loglik = em.loglik;

    const auto run = ekf_filter(sub, res.params, ball);
    res.samples.reserve(run.steps.size());
    for (std::size_t i = 0; i < run.steps.size(); ++i) {
        const auto& st = run.steps[i];
        StudySample s;
        s.t = st.t;
        s.m_pred = st.m_pred;
        s.trace_p_pos = st.P_pred.block<3, 3>(0, 0).trace();
        s.trace_p_vel = st.P_pred.block<3, 3>(3, 3).trace();
        s.trace_p_spin = st.P_pred.block<3, 3>(6, 6).trace();
        s.innovation_m = (sub[i].z - st.m_pred.segment<3>(0)).norm();
        s.posterior_gap_m = (sub[i].z - st.m_filt.segment<3>(0)).norm();
        res.samples.push_back(s);
    }
    return res;
}

inline std::vector<RateStudyResult> run_prediction_study(std::span<const Measurement3> obs,
                                                         std::span<const double> rates,
                                                         const BallParams& ball,
                                                         int em_iters = 8) {
    if (rates.empty()) throw std::invalid_argument("study: no rates given");
    std::vector<RateStudyResult> out;
    out.reserve(rates.size());
    for (double r : rates) out.push_back(run_rate_study(obs, r, ball, em_iters));
    return out;
}

inline void write_predictions_csv(const std::vector<StudySample>& samples,
                                  const std::string& path) {
    std::string out =
        "t_ns,px,py,pz,vx,vy,vz,wx,wy,wz,trace_P_pos,trace_P_vel,trace_P_spin\n";
    char buf[512];
    for (const auto& s : samples) {
        const int len = std::snprintf(
            buf, sizeof(buf),
            "%lld,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g\n",
            static_cast<long long>(s.t), s.m_pred(0), s.m_pred(1), s.m_pred(2), s.m_pred(3),
            s.m_pred(4), s.m_pred(5), s.m_pred(6), s.m_pred(7), s.m_pred(8), s.trace_p_pos,
            s.trace_p_vel, s.trace_p_spin);
        out.append(buf, static_cast<std::size_t>(len));
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error(path + ": cannot open for writing");
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw std::runtime_error(path + ": write failed");
}

inline void write_errors_csv(const std::vector<StudySample>& samples, const std::string& path) {
    std::string out = "t_ns,innovation_m,posterior_gap_m\n";
    char buf[160];
    for (const auto& s : samples) {
        const int len = std::snprintf(buf, sizeof(buf), "%lld,%.9g,%.9g\n",
                                      static_cast<long long>(s.t), s.innovation_m,
                                      s.posterior_gap_m);
        out.append(buf, static_cast<std::size_t>(len));
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error(path + ": cannot open for writing");
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw std::runtime_error(path + ": write failed");
}

// Accepts "t_ns,x,y,z" records with any extra trailing columns ignored
// (triangulation output carries a residual column).
inline std::vector<Measurement3> read_obs_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error(path + ": cannot open");
    std::vector<Measurement3> obs;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(f, line)) {
        ++line_no;
        if (line_no == 1 || line.empty()) continue;
        Measurement3 m;
        long long t = 0;
        if (std::sscanf(line.c_str(), "%lld,%lg,%lg,%lg", &t, &m.z.x(), &m.z.y(), &m.z.z()) !=
            4)
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": malformed record");
        m.t = t;
        obs.push_back(m);
    }
    return obs;
}

}  // namespace evball
