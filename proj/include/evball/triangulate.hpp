// Two-view midpoint triangulation.
//
// Back-projects one pixel ray per camera and returns the midpoint of the
// shortest segment connecting the rays. The segment length is reported as
// the residual, a direct measure of how well the two observations agree.
#pragma once

#include <stdexcept>

#include <Eigen/Dense>

#include "evball/camera.hpp"

namespace evball {

struct TriangulationResult {
    Eigen::Vector3d point = Eigen::Vector3d::Zero();
    double residual = 0;  // closest-approach gap between the two rays, meters
};

inline TriangulationResult triangulate_midpoint(const CameraModel& cam_a, const Pixel& px_a,
                                                const CameraModel& cam_b, const Pixel& px_b) {
    const Eigen::Vector3d oa = cam_a.center();
    const Eigen::Vector3d ob = cam_b.center();
    const Eigen::Vector3d da = cam_a.ray_direction(px_a.u, px_a.v);
    const Eigen::Vector3d db = cam_b.ray_direction(px_b.u, px_b.v);

    // Minimize |oa + s*da - (ob + t*db)|^2 with unit-norm directions.
    const Eigen::Vector3d w0 = oa - ob;
    const double b = da.dot(db);
    const double d = da.dot(w0);
    const double e = db.dot(w0);
    const double denom = 1.0 - b * b;
    if (denom < 1e-12) throw std::domain_error("triangulate: rays are parallel");
    const double s = (b * e - d) / denom;
    const double t = (e - b * d) / denom;
    if (s <= 0 || t <= 0)
        throw std::domain_error("triangulate: intersection lies behind a camera");

    const Eigen::Vector3d pa = oa + s * da;
    const Eigen::Vector3d pb = ob + t * db;
    TriangulationResult res;
    res.point = 0.5 * (pa + pb);
    res.residual = (pa - pb).norm();
    return res;
}

}  // namespace evball
