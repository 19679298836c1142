// Pinhole camera model and calibration file I/O.
//
// Extrinsics map world points into the camera frame: p_cam = R * p + t.
// The stored rotation must be orthonormal with determinant +1. Lens
// distortion is not modeled; calibration files may carry zero-valued
// distortion coefficients for compatibility, anything nonzero is rejected.
#pragma once

#include <cmath>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"

namespace evball {

struct Pixel {
    double u = 0, v = 0;
};

class CameraModel {
public:
    CameraModel(std::string id, int width, int height, double fx, double fy, double cx, double cy,
                const Eigen::Matrix3d& R, const Eigen::Vector3d& t)
        : id_(std::move(id)),
          width_(width),
          height_(height),
          fx_(fx),
          fy_(fy),
          cx_(cx),
          cy_(cy),
          R_(R),
          t_(t) {
        if (width_ <= 0 || height_ <= 0) throw std::invalid_argument("camera: bad sensor size");
        if (fx_ <= 0 || fy_ <= 0) throw std::invalid_argument("camera: focal length must be > 0");
        const double ortho = (R_ * R_.transpose() - Eigen::Matrix3d::Identity()).norm();
        if (ortho > 1e-9 || std::abs(R_.determinant() - 1.0) > 1e-9)
            throw std::invalid_argument("camera: rotation is not orthonormal with det +1");
    }

    // Camera placed at `pos` with the optical axis through `target`.
    // up_hint picks the roll; it must not be parallel to the view direction.
    static CameraModel look_at(std::string id, int width, int height, double fx, double fy,
                               double cx, double cy, const Eigen::Vector3d& pos,
                               const Eigen::Vector3d& target, const Eigen::Vector3d& up_hint) {
        const Eigen::Vector3d zc = (target - pos).normalized();
        Eigen::Vector3d xc = zc.cross(up_hint);
        if (xc.norm() < 1e-9) throw std::invalid_argument("camera: up_hint parallel to view axis");
        xc.normalize();
        const Eigen::Vector3d yc = zc.cross(xc);
        Eigen::Matrix3d R;
        R.row(0) = xc.transpose();
        R.row(1) = yc.transpose();
        R.row(2) = zc.transpose();
        return CameraModel(std::move(id), width, height, fx, fy, cx, cy, R, -R * pos);
    }

    const std::string& id() const { return id_; }
    int width() const { return width_; }
    int height() const { return height_; }
    double fx() const { return fx_; }
    double fy() const { return fy_; }
    double cx() const { return cx_; }
    double cy() const { return cy_; }
    const Eigen::Matrix3d& rotation() const { return R_; }
    const Eigen::Vector3d& translation() const { return t_; }

    Eigen::Vector3d to_camera(const Eigen::Vector3d& p_world) const { return R_ * p_world + t_; }

    // Optical center in world coordinates.
    Eigen::Vector3d center() const { return -R_.transpose() * t_; }

    Pixel project(const Eigen::Vector3d& p_world) const {
        const Eigen::Vector3d pc = to_camera(p_world);
        if (pc.z() <= 0) throw std::domain_error("camera: point is behind the camera");
        return {fx_ * pc.x() / pc.z() + cx_, fy_ * pc.y() / pc.z() + cy_};
    }

    double depth(const Eigen::Vector3d& p_world) const { return to_camera(p_world).z(); }

    // Unit direction in world coordinates of the back-projected pixel ray.
    Eigen::Vector3d ray_direction(double u, double v) const {
        const Eigen::Vector3d dir_cam((u - cx_) / fx_, (v - cy_) / fy_, 1.0);
        return (R_.transpose() * dir_cam).normalized();
    }

private:
    std::string id_;
    int width_, height_;
    double fx_, fy_, cx_, cy_;
    Eigen::Matrix3d R_;
    Eigen::Vector3d t_;
};

inline nlohmann::json calib_to_json(const std::vector<CameraModel>& cams) {
    nlohmann::json root;
    root["cameras"] = nlohmann::json::array();
    for (const auto& c : cams) {
        nlohmann::json j;
        j["id"] = c.id();
        j["width"] = c.width();
        j["height"] = c.height();
        j["fx"] = c.fx();
        j["fy"] = c.fy();
        j["cx"] = c.cx();
        j["cy"] = c.cy();
        std::vector<double> r(9);
        for (int i = 0; i < 3; ++i)
            for (int k = 0; k < 3; ++k) r[3 * i + k] = c.rotation()(i, k);
        j["R"] = r;
        j["t"] = std::vector<double>{c.translation().x(), c.translation().y(),
                                     c.translation().z()};
        j["dist"] = std::vector<double>{0, 0, 0, 0, 0};
        root["cameras"].push_back(std::move(j));
    }
    return root;
}

inline std::vector<CameraModel> calib_from_json(const nlohmann::json& root) {
    if (!root.contains("cameras") || !root["cameras"].is_array())
        throw std::runtime_error("calibration: missing \"cameras\" array");
    std::vector<CameraModel> cams;
    for (const auto& j : root["cameras"]) {
        const auto r = j.at("R").get<std::vector<double>>();
        const auto t = j.at("t").get<std::vector<double>>();
        if (r.size() != 9) throw std::runtime_error("calibration: R must hold 9 values");
        if (t.size() != 3) throw std::runtime_error("calibration: t must hold 3 values");
        if (j.contains("dist"))
            for (double d : j["dist"].get<std::vector<double>>())
                if (d != 0.0)
                    throw std::runtime_error("calibration: nonzero distortion is unsupported");
        Eigen::Matrix3d R;
        for (int i = 0; i < 3; ++i)
            for (int k = 0; k < 3; ++k) R(i, k) = r[3 * i + k];
        cams.emplace_back(j.at("id").get<std::string>(), j.at("width").get<int>(),
                          j.at("height").get<int>(), j.at("fx").get<double>(),
                          j.at("fy").get<double>(), j.at("cx").get<double>(),
                          j.at("cy").get<double>(), R,
                          Eigen::Vector3d(t[0], t[1], t[2]));
    }
    return cams;
}

inline void write_calib(const std::string& path, const std::vector<CameraModel>& cams) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << calib_to_json(cams).dump(2) << '\n';
}

inline std::vector<CameraModel> read_calib(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open: " + path);
    nlohmann::json root;
    try {
        in >> root;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
    return calib_from_json(root);
}

}  // namespace evball
