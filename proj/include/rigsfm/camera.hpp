// Copyright 2026 The rigsfm Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <array>
#include <cmath>
#include <string>

#include "rigsfm/errors.hpp"
#include "rigsfm/se3.hpp"

namespace rigsfm {

/// 8-parameter fisheye lens model.
///
/// Forward map for a camera-frame point (x, y, z), z > 0:
///   (xn, yn) = (x/z, y/z),  r = |(xn, yn)|,  theta = atan(r),
///   theta_d  = theta * (1 + k1 theta^2 + k2 theta^4 + k3 theta^6 + k4 theta^8),
///   u = fx * (theta_d / r) * xn + cx,  v = fy * (theta_d / r) * yn + cy.
///
/// theta -> theta_d must be strictly increasing on [0, theta_max]; checked
/// numerically at construction.
struct FisheyeIntrinsics {
    double fx = 0.0, fy = 0.0;
    double cx = 0.0, cy = 0.0;
    std::array<double, 4> k{0.0, 0.0, 0.0, 0.0};
    int width = 0, height = 0;
    double theta_max = kDefaultThetaMax;

    static constexpr double kDefaultThetaMax = 1.7; // rad, ~97 deg half-angle

    FisheyeIntrinsics() = default;

    FisheyeIntrinsics(double fx_, double fy_, double cx_, double cy_,
                      const std::array<double, 4>& k_, int width_, int height_,
                      double theta_max_ = kDefaultThetaMax)
        : fx(fx_), fy(fy_), cx(cx_), cy(cy_), k(k_), width(width_), height(height_),
          theta_max(theta_max_) {
        validate();
    }

    void validate() const {
        if (!(fx > 0.0) || !(fy > 0.0)) throw ValidationError("intrinsics: focal lengths must be positive");
        if (!(cx >= 0.0 && cx < width) || !(cy >= 0.0 && cy < height))
            throw ValidationError("intrinsics: principal point outside image");
        if (!(theta_max > 0.0)) throw ValidationError("intrinsics: theta_max must be positive");
        // numeric monotonicity check of theta -> theta_d over the domain
        constexpr int n = 1024;
        double prev = 0.0;
        for (int i = 1; i <= n; ++i) {
            const double t = theta_max * static_cast<double>(i) / n;
            const double td = distort_poly(t);
            if (!(td > prev)) throw ValidationError("intrinsics: theta_d not strictly increasing on domain");
            prev = td;
        }
    }

    double distort_poly(double theta) const {
        const double t2 = theta * theta;
        return theta * (1.0 + t2 * (k[0] + t2 * (k[1] + t2 * (k[2] + t2 * k[3]))));
    }

    /// d(theta_d)/d(theta)
    double distort_poly_deriv(double theta) const {
        const double t2 = theta * theta;
        return 1.0 + t2 * (3.0 * k[0] + t2 * (5.0 * k[1] + t2 * (7.0 * k[2] + t2 * 9.0 * k[3])));
    }
};

inline double distort_theta(double theta, const FisheyeIntrinsics& intr) {
    if (!(theta >= 0.0 && theta <= intr.theta_max))
        throw ValidationError("distort_theta: theta outside [0, theta_max]");
    return intr.distort_poly(theta);
}

inline Vec2 project(const Vec3& point_cam, const FisheyeIntrinsics& intr) {
    if (!(point_cam.z() > 0.0)) throw ValidationError("project: point behind camera");
    const double xn = point_cam.x() / point_cam.z();
    const double yn = point_cam.y() / point_cam.z();
    const double r = std::hypot(xn, yn);
    const double theta = std::atan(r);
    if (theta > intr.theta_max) throw ValidationError("project: theta outside domain");
    // theta_d / r -> 1 as r -> 0 (series limit), so the axis maps to (cx, cy) exactly
    const double scale = (r < 1e-8) ? 1.0 : intr.distort_poly(theta) / r;
    return Vec2(intr.fx * scale * xn + intr.cx, intr.fy * scale * yn + intr.cy);
}

/// Invert theta_d = poly(theta) by Newton iteration from theta = theta_d.
/// Returns the converged theta; throws NumericalError with the last residual
/// if 20 iterations do not reach |residual| < 1e-12.
inline double invert_distortion(double theta_d, const FisheyeIntrinsics& intr) {
    double theta = theta_d;
    double residual = intr.distort_poly(theta) - theta_d;
    for (int it = 0; it < 20; ++it) {
        if (std::abs(residual) < 1e-12) return theta;
        const double deriv = intr.distort_poly_deriv(theta);
        theta -= residual / deriv;
        theta = std::clamp(theta, 0.0, 2.0 * intr.theta_max);
        residual = intr.distort_poly(theta) - theta_d;
    }
    if (std::abs(residual) < 1e-12) return theta;
    throw NumericalError("invert_distortion: Newton did not converge, residual " +
                         std::to_string(residual));
}

inline Vec3 unproject(const Vec2& pixel, const FisheyeIntrinsics& intr) {
    if (!(pixel.x() >= 0.0 && pixel.x() < intr.width && pixel.y() >= 0.0 &&
          pixel.y() < intr.height))
        throw ValidationError("unproject: pixel outside image bounds");
    const double mx = (pixel.x() - intr.cx) / intr.fx;
    const double my = (pixel.y() - intr.cy) / intr.fy;
    const double rd = std::hypot(mx, my);
    if (rd < 1e-12) return Vec3(0.0, 0.0, 1.0);
    const double theta = invert_distortion(rd, intr);
    if (theta > intr.theta_max) throw ValidationError("unproject: pixel outside distortion domain");
    const double s = std::sin(theta) / rd;
    return Vec3(s * mx, s * my, std::cos(theta));
}

/// 2x3 Jacobian of the projection w.r.t. the camera-frame point.
inline Eigen::Matrix<double, 2, 3> project_point_jacobian(const Vec3& p,
                                                          const FisheyeIntrinsics& intr) {
    if (!(p.z() > 0.0)) throw ValidationError("project_point_jacobian: point behind camera");
    const double z = p.z();
    const double xn = p.x() / z;
    const double yn = p.y() / z;
    const double r = std::hypot(xn, yn);
    const double theta = std::atan(r);
    if (theta > intr.theta_max) throw ValidationError("project_point_jacobian: theta outside domain");

    double g, gp; // g = theta_d / r, gp = dg/dr
    if (r < 1e-8) {
        g = 1.0;
        gp = 0.0;
    } else {
        const double td = intr.distort_poly(theta);
        const double tdp = intr.distort_poly_deriv(theta);
        g = td / r;
        gp = (tdp / (1.0 + r * r) - g) / r;
    }

    Eigen::Matrix<double, 2, 2> duv_dn;
    if (r < 1e-8) {
        duv_dn << intr.fx * g, 0.0, 0.0, intr.fy * g;
    } else {
        duv_dn(0, 0) = intr.fx * (g + gp * xn * xn / r);
        duv_dn(0, 1) = intr.fx * gp * xn * yn / r;
        duv_dn(1, 0) = intr.fy * gp * xn * yn / r;
        duv_dn(1, 1) = intr.fy * (g + gp * yn * yn / r);
    }

    Eigen::Matrix<double, 2, 3> dn_dp;
    dn_dp << 1.0 / z, 0.0, -xn / z, 0.0, 1.0 / z, -yn / z;
    return duv_dn * dn_dp;
}

/// 2x8 Jacobian of the projection w.r.t. (fx, fy, cx, cy, k1, k2, k3, k4).
inline Eigen::Matrix<double, 2, 8> project_param_jacobian(const Vec3& p,
                                                          const FisheyeIntrinsics& intr) {
    if (!(p.z() > 0.0)) throw ValidationError("project_param_jacobian: point behind camera");
    const double xn = p.x() / p.z();
    const double yn = p.y() / p.z();
    const double r = std::hypot(xn, yn);
    const double theta = std::atan(r);
    const double scale = (r < 1e-8) ? 1.0 : intr.distort_poly(theta) / r;

    Eigen::Matrix<double, 2, 8> j = Eigen::Matrix<double, 2, 8>::Zero();
    j(0, 0) = scale * xn; // d u / d fx
    j(1, 1) = scale * yn; // d v / d fy
    j(0, 2) = 1.0;        // d u / d cx
    j(1, 3) = 1.0;        // d v / d cy
    if (r >= 1e-8) {
        const double t2 = theta * theta;
        double tp = theta * t2; // theta^(2i+1)
        for (int i = 0; i < 4; ++i) {
            j(0, 4 + i) = intr.fx * xn / r * tp;
            j(1, 4 + i) = intr.fy * yn / r * tp;
            tp *= t2;
        }
    }
    return j;
}

} // namespace rigsfm
