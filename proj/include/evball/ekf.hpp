// Extended Kalman filter over the flight state, with an RTS smoother.
//
// The mean propagates through the RK4 map and the covariance through its
// finite-difference Jacobian. Process noise is specified per reference
// interval and scaled linearly with the actual step length, so the same
// parameters serve observation streams of different rates. Position
// measurements use the Joseph-form update. The filter records per-step
// moments and Jacobians so a smoothing pass can run afterwards.
#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "evball/flight.hpp"
#include "json.hpp"

namespace evball {

struct Measurement3 {
    std::int64_t t = 0;
    Eigen::Vector3d z = Eigen::Vector3d::Zero();
};

struct EkfParams {
    Mat9 Q = Mat9::Zero();                              // per dt_ref_s of elapsed time
    Eigen::Matrix3d Rm = Eigen::Matrix3d::Zero();
    State9 mu0 = State9::Zero();
    Mat9 P0 = Mat9::Zero();
    double dt_ref_s = 1e-3;

    static EkfParams defaults() {
        EkfParams p;
        Eigen::Matrix<double, 9, 1> q;
        q << 1e-8, 1e-8, 1e-8, 1e-4, 1e-4, 1e-4, 1e-2, 1e-2, 1e-2;
        p.Q = q.asDiagonal();
        p.Rm = 25e-6 * Eigen::Matrix3d::Identity();     // (5 mm)^2
        Eigen::Matrix<double, 9, 1> p0;
        p0 << 0.01, 0.01, 0.01, 4.0, 4.0, 4.0, 2500.0, 2500.0, 2500.0;
        p.P0 = p0.asDiagonal();
        return p;
    }
};

// Symmetrizes in place and rejects matrices with eigenvalues below -tol.
template <typename Derived>
void validate_psd(Eigen::MatrixBase<Derived>& m, double tol = 1e-9) {
    typename Derived::PlainObject sym = 0.5 * (m + m.transpose());
    Eigen::SelfAdjointEigenSolver<typename Derived::PlainObject> es(sym,
                                                                    Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -tol)
        throw std::runtime_error("covariance lost positive semidefiniteness");
    m = sym;
}

struct FilterStep {
    std::int64_t t = 0;
    double dt = 0;                 // seconds since the previous step
    State9 m_pred = State9::Zero();
    Mat9 P_pred = Mat9::Zero();
    State9 m_filt = State9::Zero();
    Mat9 P_filt = Mat9::Zero();
    Mat9 F = Mat9::Identity();     // transition Jacobian of the predict into this step
};

class Ekf {
public:
    Ekf(const EkfParams& params, const BallParams& ball) : params_(params), ball_(ball) {
        reset();
    }

    void reset() {
        m_ = params_.mu0;
        P_ = params_.P0;
        validate_psd(P_);
        F_last_ = Mat9::Identity();
    }

    void predict(double dt_s) {
        if (dt_s < 0) throw std::invalid_argument("ekf: negative time step");
        if (dt_s == 0) {
            F_last_ = Mat9::Identity();
            return;
        }
        F_last_ = rk4_jacobian_fd(m_, dt_s, ball_);
        m_ = rk4_step(m_, dt_s, ball_);
        P_ = F_last_ * P_ * F_last_.transpose() + params_.Q * (dt_s / params_.dt_ref_s);
        validate_psd(P_);
    }

    // Position measurement. Returns the innovation log-density.
    double update(const Eigen::Vector3d& z) {
        const Eigen::Vector3d y = z - m_.segment<3>(0);
        const Eigen::Matrix3d s = P_.block<3, 3>(0, 0) + params_.Rm;
        const Eigen::LLT<Eigen::Matrix3d> llt(s);
        if (llt.info() != Eigen::Success)
            throw std::runtime_error("ekf: innovation covariance is not positive definite");
        const Eigen::Vector3d alpha = llt.solve(y);

        const Eigen::Matrix<double, 9, 3> k = llt.solve(P_.topRows<3>()).transpose();
        m_ += k * y;
        Mat9 ikh = Mat9::Identity();
        ikh.leftCols<3>() -= k;
        P_ = ikh * P_ * ikh.transpose() + k * params_.Rm * k.transpose();
        validate_psd(P_);

        const double log_det =
            2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
        return -0.5 * (3.0 * std::log(2.0 * std::numbers::pi) + log_det + y.dot(alpha));
    }

    const State9& mean() const { return m_; }
    const Mat9& cov() const { return P_; }
    const Mat9& last_jacobian() const { return F_last_; }
    const EkfParams& params() const { return params_; }
    const BallParams& ball() const { return ball_; }

private:
    EkfParams params_;
    BallParams ball_;
    State9 m_ = State9::Zero();
    Mat9 P_ = Mat9::Zero();
    Mat9 F_last_ = Mat9::Identity();
};

struct FilterRun {
    std::vector<FilterStep> steps;
    double log_likelihood = 0;
};

// Filters a time-ordered measurement sequence. The first measurement is
// absorbed at the prior without a predict step.
inline FilterRun ekf_filter(std::span<const Measurement3> obs, const EkfParams& params,
                            const BallParams& ball) {
    if (obs.empty()) throw std::invalid_argument("ekf: empty measurement sequence");
    Ekf ekf(params, ball);
    FilterRun run;
    run.steps.reserve(obs.size());
    std::int64_t prev_t = obs.front().t;
    for (const auto& ob : obs) {
        if (ob.t < prev_t) throw std::invalid_argument("ekf: measurements out of order");
        FilterStep st;
        st.t = ob.t;
        st.dt = static_cast<double>(ob.t - prev_t) * 1e-9;
        ekf.predict(st.dt);
        st.F = ekf.last_jacobian();
        st.m_pred = ekf.mean();
        st.P_pred = ekf.cov();
        run.log_likelihood += ekf.update(ob.z);
        st.m_filt = ekf.mean();
        st.P_filt = ekf.cov();
        run.steps.push_back(std::move(st));
        prev_t = ob.t;
    }
    return run;
}

struct SmoothedStep {
    State9 m = State9::Zero();
    Mat9 P = Mat9::Zero();
    Mat9 G = Mat9::Zero();  // smoother gain toward the next step; unused at the last
};

inline std::vector<SmoothedStep> rts_smooth(const FilterRun& run) {
    const auto& steps = run.steps;
    if (steps.empty()) return {};
    const int n = static_cast<int>(steps.size());
    std::vector<SmoothedStep> out(n);
    out[n - 1].m = steps[n - 1].m_filt;
    out[n - 1].P = steps[n - 1].P_filt;
    for (int i = n - 2; i >= 0; --i) {
        const auto& next = steps[i + 1];
        const Eigen::LDLT<Mat9> ldlt(next.P_pred);
        if (ldlt.info() != Eigen::Success || ldlt.vectorD().minCoeff() <= 0)
            throw std::runtime_error("smoother: singular predicted covariance");
        const Mat9 g = ldlt.solve(next.F * steps[i].P_filt.transpose()).transpose();
        out[i].G = g;
        out[i].m = steps[i].m_filt + g * (out[i + 1].m - next.m_pred);
        out[i].P = steps[i].P_filt + g * (out[i + 1].P - next.P_pred) * g.transpose();
        validate_psd(out[i].P, 1e-6);
    }
    return out;
}

inline nlohmann::json ekf_params_to_json(const EkfParams& p) {
    auto flat = [](const auto& m) {
        std::vector<double> v;
        v.reserve(m.size());
        for (int i = 0; i < m.rows(); ++i)
            for (int j = 0; j < m.cols(); ++j) v.push_back(m(i, j));
        return v;
    };
    nlohmann::json j;
    j["Q"] = flat(p.Q);
    j["Rm"] = flat(p.Rm);
    j["mu0"] = flat(p.mu0);
    j["P0"] = flat(p.P0);
    j["dt_ref_s"] = p.dt_ref_s;
    return j;
}

inline EkfParams ekf_params_from_json(const nlohmann::json& j) {
    auto fill = [](auto& m, const std::vector<double>& v, const char* name) {
        if (static_cast<int>(v.size()) != m.rows() * m.cols())
            throw std::runtime_error(std::string("ekf params: bad length for ") + name);
        for (int i = 0; i < m.rows(); ++i)
            for (int k = 0; k < m.cols(); ++k) m(i, k) = v[m.cols() * i + k];
    };
    EkfParams p;
    fill(p.Q, j.at("Q").get<std::vector<double>>(), "Q");
    fill(p.Rm, j.at("Rm").get<std::vector<double>>(), "Rm");
    fill(p.mu0, j.at("mu0").get<std::vector<double>>(), "mu0");
    fill(p.P0, j.at("P0").get<std::vector<double>>(), "P0");
    p.dt_ref_s = j.at("dt_ref_s").get<double>();
    if (p.dt_ref_s <= 0) throw std::runtime_error("ekf params: dt_ref_s must be > 0");
    return p;
}

inline void write_ekf_params(const std::string& path, const EkfParams& p) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << ekf_params_to_json(p).dump(2) << '\n';
}

inline EkfParams read_ekf_params(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
    return ekf_params_from_json(j);
}

}  // namespace evball
