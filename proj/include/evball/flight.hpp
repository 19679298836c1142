// Ball flight dynamics.
//
// State is [position, velocity, spin] in world coordinates. Acceleration
// combines gravity, quadratic air drag, and the Magnus force from spin.
// Spin is treated as constant over a flight. Integration uses classic RK4;
// the discrete transition Jacobian is obtained by central finite
// differences of the RK4 map, with the analytic continuous-time Jacobian
// kept alongside as an independent reference.
#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>

#include <Eigen/Dense>

namespace evball {

using State9 = Eigen::Matrix<double, 9, 1>;
using Mat9 = Eigen::Matrix<double, 9, 9>;

struct BallParams {
    double mass = 2.7e-3;   // kg
    double radius = 0.02;   // m
    // 0.5 * C_d * rho_air * cross_section / mass, with C_d 0.4, rho 1.204 kg/m^3
    double k_d = 0.5 * 0.4 * 1.204 * std::numbers::pi * 0.02 * 0.02 / 2.7e-3;
    double k_m = 4e-4;      // Magnus coupling, m/rad
    Eigen::Vector3d g = {0, 0, -9.81};
};

inline Eigen::Matrix3d skew(const Eigen::Vector3d& v) {
    Eigen::Matrix3d m;
    m << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
    return m;
}

inline State9 flight_derivative(const State9& s, const BallParams& bp) {
    const Eigen::Vector3d v = s.segment<3>(3);
    const Eigen::Vector3d w = s.segment<3>(6);
    State9 ds;
    ds.segment<3>(0) = v;
    ds.segment<3>(3) = bp.g - bp.k_d * v.norm() * v + bp.k_m * w.cross(v);
    ds.segment<3>(6).setZero();
    return ds;
}

inline State9 rk4_step(const State9& s, double dt, const BallParams& bp) {
    if (!(dt > 0)) throw std::invalid_argument("rk4: dt must be > 0");
    const State9 k1 = flight_derivative(s, bp);
    const State9 k2 = flight_derivative(s + 0.5 * dt * k1, bp);
    const State9 k3 = flight_derivative(s + 0.5 * dt * k2, bp);
    const State9 k4 = flight_derivative(s + dt * k3, bp);
    return s + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

// d(ds/dt)/ds of the continuous dynamics.
inline Mat9 continuous_jacobian(const State9& s, const BallParams& bp) {
    const Eigen::Vector3d v = s.segment<3>(3);
    const Eigen::Vector3d w = s.segment<3>(6);
    Mat9 a = Mat9::Zero();
    a.block<3, 3>(0, 3).setIdentity();
    const double vn = v.norm();
    Eigen::Matrix3d dvdv = bp.k_m * skew(w);
    if (vn > 1e-12)
        dvdv -= bp.k_d * (vn * Eigen::Matrix3d::Identity() + v * v.transpose() / vn);
    a.block<3, 3>(3, 3) = dvdv;
    a.block<3, 3>(3, 6) = -bp.k_m * skew(v);
    return a;
}

// Central finite-difference Jacobian of the one-step RK4 map.
inline Mat9 rk4_jacobian_fd(const State9& s, double dt, const BallParams& bp, double h = 1e-6) {
    Mat9 f;
    for (int i = 0; i < 9; ++i) {
        State9 plus = s, minus = s;
        plus(i) += h;
        minus(i) -= h;
        f.col(i) = (rk4_step(plus, dt, bp) - rk4_step(minus, dt, bp)) / (2.0 * h);
    }
    return f;
}

}  // namespace evball
