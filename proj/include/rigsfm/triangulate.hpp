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

#include <optional>
#include <vector>

#include "rigsfm/camera.hpp"
#include "rigsfm/se3.hpp"

namespace rigsfm {

struct Ray {
    Vec3 origin = Vec3::Zero();
    Vec3 dir = Vec3::UnitZ(); // unit
};

/// Midpoint triangulation: the point minimizing the summed squared distance
/// to all rays. Empty when the normal system is singular (parallel rays).
inline std::optional<Vec3> midpoint_triangulate(const std::vector<Ray>& rays) {
    Mat3 a = Mat3::Zero();
    Vec3 b = Vec3::Zero();
    for (const auto& r : rays) {
        const Mat3 m = Mat3::Identity() - r.dir * r.dir.transpose();
        a += m;
        b += m * r.origin;
    }
    const Eigen::FullPivLU<Mat3> lu(a);
    if (!lu.isInvertible()) return std::nullopt;
    return lu.solve(b);
}

struct TriangulationGates {
    double min_angle = 0.02;      // rad, max pairwise ray angle must reach this
    double max_reprojection = 4.0; // px
};

/// Triangulate one track given per-observation world_from_camera poses and
/// intrinsics (aligned with the rays). Rejects low-parallax tracks and any
/// track whose reprojection exceeds the gate.
inline std::optional<Vec3> triangulate_track(const std::vector<Ray>& rays,
                                             const std::vector<RigidPose>& world_from_cam,
                                             const std::vector<const FisheyeIntrinsics*>& intr,
                                             const std::vector<Vec2>& pixels,
                                             const TriangulationGates& gates) {
    if (rays.size() < 2) return std::nullopt;

    double max_angle = 0.0;
    for (std::size_t i = 0; i < rays.size() && max_angle < gates.min_angle; ++i)
        for (std::size_t j = i + 1; j < rays.size(); ++j) {
            const double c = std::clamp(rays[i].dir.dot(rays[j].dir), -1.0, 1.0);
            max_angle = std::max(max_angle, std::acos(c));
            if (max_angle >= gates.min_angle) break;
        }
    if (max_angle < gates.min_angle) return std::nullopt;

    const auto point = midpoint_triangulate(rays);
    if (!point) return std::nullopt;

    for (std::size_t i = 0; i < rays.size(); ++i) {
        try {
            const Vec3 local = world_from_cam[i].inverse().act(*point);
            const Vec2 reproj = project(local, *intr[i]);
            if ((reproj - pixels[i]).norm() > gates.max_reprojection) return std::nullopt;
        } catch (const ValidationError&) {
            return std::nullopt; // behind camera or outside the lens domain
        }
    }
    return point;
}

} // namespace rigsfm
