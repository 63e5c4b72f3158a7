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

#include <Eigen/Dense>
#include <cmath>

#include "rigsfm/errors.hpp"

namespace rigsfm {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;

inline Mat3 skew(const Vec3& v) {
    Mat3 m;
    m << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
    return m;
}

inline Vec3 vee(const Mat3& m) { return Vec3(m(2, 1), m(0, 2), m(1, 0)); }

/// se(3) element: translational part rho (m), rotational part phi (rad).
struct Twist {
    Vec3 rho = Vec3::Zero();
    Vec3 phi = Vec3::Zero();

    Twist() = default;
    Twist(const Vec3& rho_, const Vec3& phi_) : rho(rho_), phi(phi_) {}
    explicit Twist(const Vec6& v) : rho(v.head<3>()), phi(v.tail<3>()) {}

    Vec6 vector() const {
        Vec6 v;
        v << rho, phi;
        return v;
    }
    double norm() const { return vector().norm(); }
};

namespace detail {

// Rotation coefficients with series fallbacks below theta ~ 1e-4
// (theta^2 < 1e-8 keeps the truncation error under 1e-16).
struct So3Coeffs {
    double a; // sin(t)/t
    double b; // (1-cos(t))/t^2
    double c; // (t-sin(t))/t^3
};

inline So3Coeffs so3_coeffs(double theta) {
    So3Coeffs k;
    const double t2 = theta * theta;
    if (theta < 1e-4) {
        k.a = 1.0 - t2 / 6.0 + t2 * t2 / 120.0;
        k.b = 0.5 - t2 / 24.0 + t2 * t2 / 720.0;
        k.c = 1.0 / 6.0 - t2 / 120.0 + t2 * t2 / 5040.0;
    } else {
        k.a = std::sin(theta) / theta;
        k.b = (1.0 - std::cos(theta)) / t2;
        k.c = (theta - std::sin(theta)) / (t2 * theta);
    }
    return k;
}

} // namespace detail

inline Mat3 so3_exp(const Vec3& phi) {
    const double theta = phi.norm();
    const auto k = detail::so3_coeffs(theta);
    const Mat3 s = skew(phi);
    return Mat3::Identity() + k.a * s + k.b * s * s;
}

/// Left Jacobian of SO(3) (the V matrix of the SE(3) exponential).
inline Mat3 so3_left_jacobian(const Vec3& phi) {
    const double theta = phi.norm();
    const auto k = detail::so3_coeffs(theta);
    const Mat3 s = skew(phi);
    return Mat3::Identity() + k.b * s + k.c * s * s;
}

inline Mat3 so3_left_jacobian_inverse(const Vec3& phi) {
    const double theta = phi.norm();
    const Mat3 s = skew(phi);
    double d;
    if (theta < 1e-4) {
        const double t2 = theta * theta;
        d = 1.0 / 12.0 + t2 / 720.0 + t2 * t2 / 30240.0;
    } else {
        d = 1.0 / (theta * theta) -
            (1.0 + std::cos(theta)) / (2.0 * theta * std::sin(theta));
    }
    return Mat3::Identity() - 0.5 * s + d * s * s;
}

inline Vec3 so3_log(const Mat3& r) {
    const double cos_theta = std::clamp((r.trace() - 1.0) * 0.5, -1.0, 1.0);
    const double theta = std::acos(cos_theta);
    if (theta > M_PI - 1e-9) {
        throw ValidationError("so3_log: rotation angle at or beyond pi");
    }
    const Vec3 w = vee(r - r.transpose());
    if (theta < 1e-6) {
        // w = 2 sin(theta) * axis; theta/(2 sin(theta)) ~ 1/2 + theta^2/12
        return 0.5 * (1.0 + theta * theta / 6.0) * w;
    }
    return theta / (2.0 * std::sin(theta)) * w;
}

/// SE(3) element. Rotation kept orthonormal; long composition chains are
/// re-normalized through a unit quaternion (chain threshold 100).
struct RigidPose {
    Mat3 rotation = Mat3::Identity();
    Vec3 translation = Vec3::Zero();

    RigidPose() = default;

    RigidPose(const Mat3& r, const Vec3& t) : rotation(r), translation(t) {
        const double ortho = (r.transpose() * r - Mat3::Identity()).norm();
        if (ortho > 1e-9 || std::abs(r.determinant() - 1.0) > 1e-9) {
            throw ValidationError("RigidPose: rotation is not orthonormal with det +1");
        }
    }

    static RigidPose identity() { return RigidPose(); }

    static RigidPose from_parts_unchecked(const Mat3& r, const Vec3& t, int chain = 0) {
        RigidPose p;
        p.rotation = r;
        p.translation = t;
        p.chain_ = chain;
        return p;
    }

    Vec3 act(const Vec3& x) const { return rotation * x + translation; }

    RigidPose inverse() const {
        return from_parts_unchecked(rotation.transpose(),
                                    -(rotation.transpose() * translation), chain_);
    }

    RigidPose operator*(const RigidPose& rhs) const {
        RigidPose out = from_parts_unchecked(rotation * rhs.rotation,
                                             rotation * rhs.translation + translation,
                                             std::max(chain_, rhs.chain_) + 1);
        if (out.chain_ > 100) out.renormalize();
        return out;
    }

    Eigen::Matrix4d matrix() const {
        Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
        m.topLeftCorner<3, 3>() = rotation;
        m.topRightCorner<3, 1>() = translation;
        return m;
    }

    void renormalize() {
        Eigen::Quaterniond q(rotation);
        q.normalize();
        rotation = q.toRotationMatrix();
        chain_ = 0;
    }

  private:
    int chain_ = 0;
};

inline RigidPose se3_exp(const Twist& xi) {
    return RigidPose::from_parts_unchecked(so3_exp(xi.phi),
                                           so3_left_jacobian(xi.phi) * xi.rho);
}

inline Twist se3_log(const RigidPose& pose) {
    const Vec3 phi = so3_log(pose.rotation);
    return Twist(so3_left_jacobian_inverse(phi) * pose.translation, phi);
}

/// Absolute camera pose from the shared rig trajectory and the camera's
/// static local offset: world_from_camera = world_from_rig * rig_from_camera.
inline RigidPose rig_absolute_pose(const RigidPose& rig_traj_at_t, const RigidPose& local) {
    return rig_traj_at_t * local;
}

namespace detail {

// Q block of the SE(3) left Jacobian (Barfoot's closed form), twist ordered (rho, phi).
inline Mat3 se3_q_matrix(const Twist& xi) {
    const Mat3 rx = skew(xi.rho);
    const Mat3 px = skew(xi.phi);
    const double theta = xi.phi.norm();
    const double t2 = theta * theta;
    double c1, c2, c3;
    if (theta < 1e-4) {
        c1 = 1.0 / 6.0 - t2 / 120.0;
        c2 = -1.0 / 24.0 + t2 / 720.0;
        c3 = 1.0 / 120.0 - t2 / 5040.0;
    } else {
        const double st = std::sin(theta);
        const double ct = std::cos(theta);
        c1 = (theta - st) / (t2 * theta);
        c2 = (1.0 - t2 / 2.0 - ct) / (t2 * t2);
        c3 = -(theta - st - t2 * theta / 6.0) / (t2 * t2 * theta);
    }
    const Mat3 pr = px * rx;
    const Mat3 rp = rx * px;
    const Mat3 prp = pr * px;
    Mat3 q = 0.5 * rx;
    q += c1 * (pr + rp + prp);
    q -= c2 * (px * pr + rp * px - 3.0 * prp);
    q -= 0.5 * (c2 + 3.0 * c3) * (prp * px + px * prp);
    return q;
}

} // namespace detail

/// Inverse left Jacobian of SE(3): d/d eps log(exp(eps) * exp(xi)) at eps = 0.
/// Rows/cols ordered (rho, phi).
inline Mat6 se3_left_jacobian_inverse(const Twist& xi) {
    const Mat3 jinv = so3_left_jacobian_inverse(xi.phi);
    const Mat3 q = detail::se3_q_matrix(xi);
    Mat6 out = Mat6::Zero();
    out.topLeftCorner<3, 3>() = jinv;
    out.bottomRightCorner<3, 3>() = jinv;
    out.topRightCorner<3, 3>() = -jinv * q * jinv;
    return out;
}

} // namespace rigsfm
