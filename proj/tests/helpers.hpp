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

#include <vector>

#include "rigsfm/ba.hpp"
#include "rigsfm/rig.hpp"
#include "rigsfm/rng.hpp"

namespace rigsfm::testing {

/// Small linear rig: `n_cams` cameras spaced along x, all looking +z, chain
/// adjacency. Camera 0 is the reference (identity prior).
inline RigConfig make_test_rig(int n_cams, double spacing = 0.5) {
    RigConfig rig;
    const FisheyeIntrinsics intr(300.0, 300.0, 320.0, 240.0,
                                 {-0.02, 0.004, -0.0008, 0.0001}, 640, 480);
    for (int c = 0; c < n_cams; ++c) {
        RigCamera cam;
        cam.id = "cam" + std::to_string(c);
        cam.intrinsics = intr;
        cam.prior = RigidPose(Mat3::Identity(), Vec3(spacing * c, 0.0, 0.0));
        rig.cameras.push_back(std::move(cam));
    }
    rig.reference_camera = "cam0";
    rig.adjacency.assign(n_cams, std::vector<int>(n_cams, 0));
    for (int c = 0; c + 1 < n_cams; ++c) rig.adjacency[c][c + 1] = rig.adjacency[c + 1][c] = 1;
    rig.validate();
    return rig;
}

struct BaFixture {
    BaState truth;              // ground-truth trajectory/extrinsics/points
    BaState state;              // perturbed initial state handed to the solver
    RigConfig rig;              // priors possibly perturbed away from truth
    std::vector<BaObservation> observations;
    std::vector<char> is_outlier;
};

struct BaFixtureOptions {
    int n_times = 8;
    int n_points = 300;
    double pixel_noise_halfwidth = 0.0; // uniform [-h, h] per axis
    double outlier_fraction = 0.0;
    double prior_translation_offset = 0.0; // m, applied to non-reference priors
    double prior_rotation_offset = 0.0;    // rad
    double point_perturbation = 0.0;       // m, sigma of initial point offset
    bool perturb_state_extrinsics_to_prior = true;
};

/// Rig sweeping past a static point cloud: trajectory translates along x with
/// a slight yaw drift, points fill a slab in front of the cameras.
inline BaFixture make_ba_fixture(int n_cams, const BaFixtureOptions& opt, Rng& rng) {
    BaFixture fx;
    fx.rig = make_test_rig(n_cams);
    const int ref = fx.rig.reference_index();

    for (int c = 0; c < n_cams; ++c) fx.truth.extrinsics.push_back(fx.rig.cameras[c].prior);

    for (int t = 0; t < opt.n_times; ++t) {
        const Vec3 pos(-0.8 + 0.18 * t, 0.02 * t, 0.0);
        const Mat3 rot = so3_exp(Vec3(0.0, 0.0, 0.004 * t));
        fx.truth.trajectory.push_back(RigidPose(rot, pos));
    }

    for (int p = 0; p < opt.n_points; ++p)
        fx.truth.points.emplace_back(rng.uniform(-2.0, 3.5), rng.uniform(-1.2, 1.2),
                                     rng.uniform(2.0, 5.0));

    // observations where the projection lands inside the image
    for (int t = 0; t < opt.n_times; ++t) {
        for (int c = 0; c < n_cams; ++c) {
            const RigidPose cam_from_world =
                (fx.truth.trajectory[t] * fx.truth.extrinsics[c]).inverse();
            const auto& intr = fx.rig.cameras[c].intrinsics;
            for (int p = 0; p < opt.n_points; ++p) {
                Vec2 px;
                try {
                    px = project(cam_from_world.act(fx.truth.points[p]), intr);
                } catch (const ValidationError&) {
                    continue;
                }
                if (px.x() < 0 || px.x() >= intr.width || px.y() < 0 || px.y() >= intr.height)
                    continue;
                bool outlier = rng.uniform() < opt.outlier_fraction;
                if (outlier) {
                    px = Vec2(rng.uniform(0.0, intr.width), rng.uniform(0.0, intr.height));
                } else if (opt.pixel_noise_halfwidth > 0.0) {
                    px += Vec2(rng.uniform(-opt.pixel_noise_halfwidth, opt.pixel_noise_halfwidth),
                               rng.uniform(-opt.pixel_noise_halfwidth, opt.pixel_noise_halfwidth));
                }
                fx.observations.push_back({t, c, p, px});
                fx.is_outlier.push_back(outlier ? 1 : 0);
            }
        }
    }

    // perturb the priors away from the truth (installation tolerance)
    if (opt.prior_translation_offset > 0.0 || opt.prior_rotation_offset > 0.0) {
        for (int c = 0; c < n_cams; ++c) {
            if (c == ref) continue;
            Vec3 dt(rng.normal(), rng.normal(), rng.normal());
            dt = dt.normalized() * opt.prior_translation_offset;
            Vec3 axis(rng.normal(), rng.normal(), rng.normal());
            axis.normalize();
            const RigidPose bump(so3_exp(axis * opt.prior_rotation_offset), dt);
            fx.rig.cameras[c].prior = bump * fx.rig.cameras[c].prior;
        }
    }

    fx.state = fx.truth;
    if (opt.perturb_state_extrinsics_to_prior)
        for (int c = 0; c < n_cams; ++c) fx.state.extrinsics[c] = fx.rig.cameras[c].prior;
    if (opt.point_perturbation > 0.0)
        for (auto& x : fx.state.points)
            x += opt.point_perturbation * Vec3(rng.normal(), rng.normal(), rng.normal());
    return fx;
}

inline double rotation_angle(const Mat3& a, const Mat3& b) {
    const Mat3 d = a.transpose() * b;
    return std::acos(std::clamp((d.trace() - 1.0) * 0.5, -1.0, 1.0));
}

} // namespace rigsfm::testing
