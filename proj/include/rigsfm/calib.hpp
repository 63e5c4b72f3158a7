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

#include "rigsfm/camera.hpp"
#include "rigsfm/errors.hpp"

namespace rigsfm {

struct CalibObservation {
    Vec3 point_cam; // known 3D point in the camera frame
    Vec2 pixel;     // observed projection
};

struct CalibResult {
    FisheyeIntrinsics intrinsics;
    double rms = 0.0; // pixels
};

namespace detail {

// Per-coordinate RMS (2N residual components for N points).
inline double calib_rms(const std::vector<CalibObservation>& obs,
                        const FisheyeIntrinsics& intr) {
    double ss = 0.0;
    for (const auto& o : obs) ss += (project(o.point_cam, intr) - o.pixel).squaredNorm();
    return std::sqrt(ss / (2.0 * static_cast<double>(obs.size())));
}

inline bool poly_monotone(const FisheyeIntrinsics& intr) {
    constexpr int n = 1024;
    double prev = 0.0;
    for (int i = 1; i <= n; ++i) {
        const double td = intr.distort_poly(intr.theta_max * i / n);
        if (!(td > prev)) return false;
        prev = td;
    }
    return true;
}

} // namespace detail

/// Levenberg-Marquardt refinement of the 8 intrinsic parameters against fixed
/// 2D-3D correspondences. Steps that would break theta_d monotonicity are
/// rejected like any cost-increasing step, so the returned model always
/// satisfies the construction invariant and RMS never exceeds the input's.
inline CalibResult refine_intrinsics(const std::vector<CalibObservation>& correspondences,
                                     const FisheyeIntrinsics& initial, int max_iters = 50) {
    if (correspondences.size() < 20)
        throw ValidationError("refine_intrinsics: need at least 20 correspondences");

    using Vec8 = Eigen::Matrix<double, 8, 1>;
    using Mat8 = Eigen::Matrix<double, 8, 8>;

    auto pack = [](const FisheyeIntrinsics& c) {
        Vec8 p;
        p << c.fx, c.fy, c.cx, c.cy, c.k[0], c.k[1], c.k[2], c.k[3];
        return p;
    };
    auto unpack = [&initial](const Vec8& p) {
        FisheyeIntrinsics c = initial;
        c.fx = p[0];
        c.fy = p[1];
        c.cx = p[2];
        c.cy = p[3];
        c.k = {p[4], p[5], p[6], p[7]};
        return c;
    };
    auto cost = [&](const FisheyeIntrinsics& c) {
        double ss = 0.0;
        for (const auto& o : correspondences)
            ss += (project(o.point_cam, c) - o.pixel).squaredNorm();
        return ss;
    };

    FisheyeIntrinsics cur = initial;
    double cur_cost = cost(cur);
    double mu = 1e-6;
    bool checked_rank = false;

    for (int it = 0; it < max_iters; ++it) {
        Mat8 h = Mat8::Zero();
        Vec8 g = Vec8::Zero();
        for (const auto& o : correspondences) {
            const auto j = project_param_jacobian(o.point_cam, cur);
            const Vec2 r = project(o.point_cam, cur) - o.pixel;
            h += j.transpose() * j;
            g += j.transpose() * r;
        }
        if (!checked_rank) {
            const Eigen::JacobiSVD<Mat8> svd(h);
            if (svd.singularValues()[7] < 1e-10 * svd.singularValues()[0])
                throw NumericalError("refine_intrinsics: rank-deficient configuration");
            checked_rank = true;
        }
        if (g.lpNorm<Eigen::Infinity>() < 1e-14) break;

        bool accepted = false;
        for (int trial = 0; trial < 12; ++trial) {
            Mat8 hd = h;
            hd.diagonal() += mu * h.diagonal().cwiseMax(1e-12);
            const Vec8 step = hd.ldlt().solve(-g);
            FisheyeIntrinsics cand;
            double cand_cost = std::numeric_limits<double>::infinity();
            bool valid = true;
            try {
                cand = unpack(pack(cur) + step);
                if (!(cand.fx > 0.0 && cand.fy > 0.0) || !detail::poly_monotone(cand)) valid = false;
                else cand_cost = cost(cand);
            } catch (const std::exception&) {
                valid = false;
            }
            if (valid && cand_cost < cur_cost) {
                cur = cand;
                cur_cost = cand_cost;
                mu = std::max(mu / 3.0, 1e-12);
                accepted = true;
                break;
            }
            mu *= 4.0;
        }
        if (!accepted) break;
    }

    CalibResult out;
    out.intrinsics = cur;
    out.rms = detail::calib_rms(correspondences, cur);
    return out;
}

} // namespace rigsfm
