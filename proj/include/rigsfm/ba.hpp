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

#include <atomic>
#include <functional>
#include <thread>
#include <vector>

#include "rigsfm/camera.hpp"
#include "rigsfm/rig.hpp"
#include "rigsfm/se3.hpp"

namespace rigsfm {

struct SfmConfig {
    double huber_delta = 1.0;             // px, robust loss scale
    double lambda_prior = 1e4;            // weight of the extrinsic prior penalty
    int lm_max_iters = 60;
    double lm_tolerance = 1e-12;          // relative cost decrease
    double min_triangulation_angle = 0.02; // rad
    double max_reprojection_px = 4.0;     // observation pruning gate
    int prune_rounds = 2;
    int threads = 1;

    void validate() const {
        if (!(huber_delta > 0.0)) throw ValidationError("sfm: huber_delta must be positive");
        if (!(lambda_prior >= 0.0)) throw ValidationError("sfm: lambda_prior must be non-negative");
        if (lm_max_iters < 1) throw ValidationError("sfm: lm_max_iters must be >= 1");
        if (!(lm_tolerance > 0.0)) throw ValidationError("sfm: lm_tolerance must be positive");
        if (!(min_triangulation_angle > 0.0))
            throw ValidationError("sfm: min_triangulation_angle must be positive");
        if (!(max_reprojection_px > 0.0))
            throw ValidationError("sfm: max_reprojection_px must be positive");
        if (threads < 1) throw ValidationError("sfm: threads must be >= 1");
    }
};

/// One reprojection observation in the bundle: point `point` seen by camera
/// `cam` at trajectory slot `traj`.
struct BaObservation {
    int traj = 0;
    int cam = 0;
    int point = 0;
    Vec2 pixel = Vec2::Zero();
};

struct BaReport {
    int iterations = 0;
    int pruned_observations = 0;
    double initial_cost = 0.0;
    double final_cost = 0.0;
    double reprojection_cost = 0.0; // robust reprojection part of final_cost
    double prior_cost = 0.0;        // lambda * sum of squared twist deviations
    std::vector<double> cost_history; // cost after each accepted step
    bool converged = true;
    bool warning = false; // no descending step found before gradient vanished
};

/// Bundle state: per-time rig poses, per-camera local extrinsics, points.
struct BaState {
    std::vector<RigidPose> trajectory;   // world_from_rig per time slot
    std::vector<RigidPose> extrinsics;   // rig_from_camera per rig camera
    std::vector<Vec3> points;
};

namespace detail {

struct ObsEval {
    Vec2 r = Vec2::Zero();                              // whitened residual
    Eigen::Matrix<double, 2, 6> jt;                     // d r / d traj twist
    Eigen::Matrix<double, 2, 6> je;                     // d r / d ext twist
    Eigen::Matrix<double, 2, 3> jp;                     // d r / d point
    double raw_norm = 0.0;                              // unwhitened residual norm
    bool valid_projection = true;
};

// Huber on the squared residual norm: identity below delta^2, linear growth above.
inline double huber_rho(double sq, double delta) {
    if (sq <= delta * delta) return sq;
    return 2.0 * delta * std::sqrt(sq) - delta * delta;
}

inline double huber_weight(double sq, double delta) {
    if (sq <= delta * delta) return 1.0;
    return delta / std::sqrt(sq);
}

inline void run_chunked(std::size_t n, int threads, const std::function<void(std::size_t, std::size_t)>& fn) {
    if (threads <= 1 || n < 2048) {
        fn(0, n);
        return;
    }
    // fixed chunking: results land in per-observation slots, so the outcome
    // is bitwise identical for any thread count
    const std::size_t chunk = 2048;
    std::vector<std::thread> pool;
    std::atomic<std::size_t> next{0};
    for (int w = 0; w < threads; ++w)
        pool.emplace_back([&]() {
            for (;;) {
                const std::size_t begin = next.fetch_add(chunk);
                if (begin >= n) return;
                fn(begin, std::min(n, begin + chunk));
            }
        });
    for (auto& th : pool) th.join();
}

} // namespace detail

/// Levenberg-Marquardt minimization of the rig-factorized objective:
/// robust reprojection through the fisheye model plus a quadratic twist
/// penalty tying each camera's extrinsic to its prior. The reference camera's
/// extrinsic is gauge-fixed. Points are eliminated by a Schur complement;
/// the reduced camera system is solved densely.
class RigBundleAdjuster {
  public:
    RigBundleAdjuster(const RigConfig& rig, SfmConfig cfg) : rig_(rig), cfg_(cfg) {
        cfg_.validate();
        ref_cam_ = rig.reference_index();
    }

    /// Adjust in place. `valid` flags observations excluded by pruning; it is
    /// updated when pruning rounds run.
    BaReport adjust(BaState& state, std::vector<BaObservation>& observations,
                    std::vector<char>& valid) {
        if (valid.size() != observations.size())
            throw ValidationError("bundle_adjust: validity flags misaligned");
        // drop observations that cannot even be evaluated at the start
        for (std::size_t i = 0; i < observations.size(); ++i) {
            if (!valid[i]) continue;
            if (!std::isfinite(residual_norm(state, observations[i]))) valid[i] = 0;
        }

        BaReport report;
        report.initial_cost = total_cost(state, observations, valid);
        double cost = report.initial_cost;
        if (!std::isfinite(cost)) throw NumericalError("bundle_adjust: non-finite initial cost");

        for (int round = 0; ; ++round) {
            cost = lm_loop(state, observations, valid, cost, report);
            if (round >= cfg_.prune_rounds) break;
            int pruned = 0;
            for (std::size_t i = 0; i < observations.size(); ++i) {
                if (!valid[i]) continue;
                const double rn = residual_norm(state, observations[i]);
                if (!(rn <= cfg_.max_reprojection_px)) {
                    valid[i] = 0;
                    ++pruned;
                }
            }
            report.pruned_observations += pruned;
            if (pruned == 0) break;
            cost = total_cost(state, observations, valid);
        }

        report.final_cost = cost;
        report.reprojection_cost = reprojection_cost(state, observations, valid);
        report.prior_cost = prior_cost(state);
        return report;
    }

    double total_cost(const BaState& state, const std::vector<BaObservation>& obs,
                      const std::vector<char>& valid) const {
        return reprojection_cost(state, obs, valid) + prior_cost(state);
    }

    double reprojection_cost(const BaState& state, const std::vector<BaObservation>& obs,
                             const std::vector<char>& valid) const {
        double sum = 0.0;
        for (std::size_t i = 0; i < obs.size(); ++i) {
            if (!valid[i]) continue;
            const double rn = residual_norm(state, obs[i]);
            if (!std::isfinite(rn)) return std::numeric_limits<double>::infinity();
            sum += detail::huber_rho(rn * rn, cfg_.huber_delta);
        }
        return sum;
    }

    double prior_cost(const BaState& state) const {
        double sum = 0.0;
        for (std::size_t c = 0; c < state.extrinsics.size(); ++c) {
            if (static_cast<int>(c) == ref_cam_) continue;
            const Twist xi = se3_log(state.extrinsics[c] * rig_.cameras[c].prior.inverse());
            sum += cfg_.lambda_prior * xi.vector().squaredNorm();
        }
        return sum;
    }

    /// Whitened residual and analytic Jacobians of one observation; exposed
    /// for finite-difference validation.
    detail::ObsEval evaluate_observation(const BaState& state, const BaObservation& o) const {
        return evaluate_one(state, o);
    }

    /// Unrobust reprojection norm; NaN when the point does not project.
    double residual_norm(const BaState& state, const BaObservation& o) const {
        try {
            const RigidPose cam_from_world =
                (state.trajectory[o.traj] * state.extrinsics[o.cam]).inverse();
            const Vec2 proj = project(cam_from_world.act(state.points[o.point]),
                                      rig_.cameras[o.cam].intrinsics);
            return (proj - o.pixel).norm();
        } catch (const ValidationError&) {
            return std::numeric_limits<double>::quiet_NaN();
        }
    }

  private:
    double lm_loop(BaState& state, const std::vector<BaObservation>& obs,
                   const std::vector<char>& valid, double cost, BaReport& report) {
        const int n_traj = static_cast<int>(state.trajectory.size());
        const int n_ext = static_cast<int>(state.extrinsics.size());
        const int n_cam_params = 6 * n_traj + 6 * (n_ext - 1);
        auto ext_offset = [&](int cam) {
            // extrinsic block index, reference camera excluded
            const int idx = cam < ref_cam_ ? cam : cam - 1;
            return 6 * n_traj + 6 * idx;
        };

        double mu = 1e-6;
        std::vector<detail::ObsEval> evals(obs.size());

        for (int iter = 0; iter < cfg_.lm_max_iters; ++iter) {
            ++report.iterations;
            evaluate_all(state, obs, valid, evals);

            Eigen::VectorXd g_cam = Eigen::VectorXd::Zero(n_cam_params);
            Eigen::MatrixXd s = Eigen::MatrixXd::Zero(n_cam_params, n_cam_params);
            const int n_pts = static_cast<int>(state.points.size());
            std::vector<Mat3> h_pp(n_pts, Mat3::Zero());
            std::vector<Vec3> g_p(n_pts, Vec3::Zero());

            // camera-camera and point blocks
            for (std::size_t i = 0; i < obs.size(); ++i) {
                if (!valid[i] || !evals[i].valid_projection) continue;
                const auto& e = evals[i];
                const int rt = 6 * obs[i].traj;
                s.block<6, 6>(rt, rt) += e.jt.transpose() * e.jt;
                g_cam.segment<6>(rt) += e.jt.transpose() * e.r;
                if (obs[i].cam != ref_cam_) {
                    const int re = ext_offset(obs[i].cam);
                    s.block<6, 6>(re, re) += e.je.transpose() * e.je;
                    g_cam.segment<6>(re) += e.je.transpose() * e.r;
                    s.block<6, 6>(rt, re) += e.jt.transpose() * e.je;
                    s.block<6, 6>(re, rt) += e.je.transpose() * e.jt;
                }
                h_pp[obs[i].point] += e.jp.transpose() * e.jp;
                g_p[obs[i].point] += e.jp.transpose() * e.r;
            }

            // extrinsic prior residuals
            for (int c = 0; c < n_ext; ++c) {
                if (c == ref_cam_ || cfg_.lambda_prior == 0.0) continue;
                const Twist xi = se3_log(state.extrinsics[c] * rig_.cameras[c].prior.inverse());
                const double sq = std::sqrt(cfg_.lambda_prior);
                const Vec6 rp = sq * xi.vector();
                const Mat6 jp = sq * se3_left_jacobian_inverse(xi);
                const int re = ext_offset(c);
                s.block<6, 6>(re, re) += jp.transpose() * jp;
                g_cam.segment<6>(re) += jp.transpose() * rp;
            }

            const double g_inf = std::max(
                g_cam.lpNorm<Eigen::Infinity>(),
                [&] {
                    double m = 0.0;
                    for (const auto& g : g_p) m = std::max(m, g.lpNorm<Eigen::Infinity>());
                    return m;
                }());
            if (g_inf < 1e-12) return cost; // at a stationary point

            std::vector<std::vector<std::size_t>> obs_of_point(n_pts);
            for (std::size_t i = 0; i < obs.size(); ++i)
                if (valid[i] && evals[i].valid_projection)
                    obs_of_point[obs[i].point].push_back(i);

            bool accepted = false;
            for (int trial = 0; trial < 16 && !accepted; ++trial) {
                // damped point blocks and Schur complement
                Eigen::MatrixXd s_d = s;
                Eigen::VectorXd g_red = g_cam;
                std::vector<Mat3> h_pp_dinv(n_pts);
                for (int p = 0; p < n_pts; ++p) {
                    Mat3 d = h_pp[p];
                    d.diagonal() += mu * h_pp[p].diagonal().cwiseMax(1e-12);
                    h_pp_dinv[p] = d.inverse();
                }

                // W_j H_pp_j^-1 W_j^T, streamed per point over its observations
                for (int p = 0; p < n_pts; ++p) {
                    const auto& list = obs_of_point[p];
                    if (list.empty()) continue;
                    // collect cam-block rows of W_j
                    std::vector<std::pair<int, Eigen::Matrix<double, 6, 3>>> wrows;
                    for (std::size_t i : list) {
                        const auto& e = evals[i];
                        wrows.emplace_back(6 * obs[i].traj, e.jt.transpose() * e.jp);
                        if (obs[i].cam != ref_cam_)
                            wrows.emplace_back(ext_offset(obs[i].cam), e.je.transpose() * e.jp);
                    }
                    const Mat3& dinv = h_pp_dinv[p];
                    const Vec3 dg = dinv * g_p[p];
                    for (const auto& [ra, wa] : wrows) {
                        g_red.segment<6>(ra) -= wa * dg;
                        const Eigen::Matrix<double, 6, 3> wad = wa * dinv;
                        for (const auto& [rb, wb] : wrows)
                            s_d.block<6, 6>(ra, rb) -= wad * wb.transpose();
                    }
                }

                s_d.diagonal() += mu * s.diagonal().cwiseMax(1e-12);
                const Eigen::VectorXd delta_cam = s_d.ldlt().solve(-g_red);
                if (!delta_cam.allFinite()) {
                    mu *= 4.0;
                    continue;
                }

                // back-substitute the points
                BaState trial_state = state;
                for (int ti = 0; ti < n_traj; ++ti)
                    trial_state.trajectory[ti] =
                        se3_exp(Twist(Vec6(delta_cam.segment<6>(6 * ti)))) * state.trajectory[ti];
                for (int c = 0; c < n_ext; ++c) {
                    if (c == ref_cam_) continue;
                    trial_state.extrinsics[c] =
                        se3_exp(Twist(Vec6(delta_cam.segment<6>(ext_offset(c))))) *
                        state.extrinsics[c];
                }
                for (int p = 0; p < n_pts; ++p) {
                    const auto& list = obs_of_point[p];
                    if (list.empty()) continue;
                    Vec3 rhs = g_p[p];
                    for (std::size_t i : list) {
                        const auto& e = evals[i];
                        rhs += (e.jt.transpose() * e.jp).transpose() *
                               delta_cam.segment<6>(6 * obs[i].traj);
                        if (obs[i].cam != ref_cam_)
                            rhs += (e.je.transpose() * e.jp).transpose() *
                                   delta_cam.segment<6>(ext_offset(obs[i].cam));
                    }
                    trial_state.points[p] -= h_pp_dinv[p] * rhs;
                }

                const double trial_cost = total_cost(trial_state, obs, valid);
                if (std::isnan(trial_cost))
                    throw NumericalError("bundle_adjust: NaN cost in trial state");
                if (trial_cost < cost) {
                    state = std::move(trial_state);
                    const double drop = cost - trial_cost;
                    cost = trial_cost;
                    report.cost_history.push_back(cost);
                    mu = std::max(mu / 3.0, 1e-12);
                    accepted = true;
                    if (drop < cfg_.lm_tolerance * std::max(cost, 1e-300)) return cost;
                } else {
                    mu *= 4.0;
                }
            }
            if (!accepted) {
                report.warning = true; // no descending step within the trial budget
                return cost;
            }
        }
        report.converged = false;
        return cost;
    }

    void evaluate_all(const BaState& state, const std::vector<BaObservation>& obs,
                      const std::vector<char>& valid, std::vector<detail::ObsEval>& evals) const {
        // cache per-(traj, cam) pose decompositions
        detail::run_chunked(obs.size(), cfg_.threads, [&](std::size_t begin, std::size_t end) {
            for (std::size_t i = begin; i < end; ++i) {
                if (!valid[i]) continue;
                evals[i] = evaluate_one(state, obs[i]);
            }
        });
    }

    detail::ObsEval evaluate_one(const BaState& state, const BaObservation& o) const {
        detail::ObsEval e;
        const RigidPose& tw = state.trajectory[o.traj];
        const RigidPose& tc = state.extrinsics[o.cam];
        const Vec3& x = state.points[o.point];
        const Vec3 z = tw.rotation.transpose() * (x - tw.translation); // rig frame
        const Vec3 y = tc.rotation.transpose() * (z - tc.translation); // camera frame
        Eigen::Matrix<double, 2, 3> jpi;
        Vec2 proj;
        try {
            const auto& intr = rig_.cameras[o.cam].intrinsics;
            proj = project(y, intr);
            jpi = project_point_jacobian(y, intr);
        } catch (const ValidationError&) {
            e.valid_projection = false;
            return e;
        }
        const Vec2 r = proj - o.pixel;
        const double w = detail::huber_weight(r.squaredNorm(), cfg_.huber_delta);
        const double sw = std::sqrt(w);

        const Mat3 rct = tc.rotation.transpose();
        const Mat3 rwt = tw.rotation.transpose();
        Eigen::Matrix<double, 3, 6> dz_dtraj;
        dz_dtraj.leftCols<3>() = -rwt;
        dz_dtraj.rightCols<3>() = rwt * skew(x);
        Eigen::Matrix<double, 3, 6> dy_dext;
        dy_dext.leftCols<3>() = -rct;
        dy_dext.rightCols<3>() = rct * skew(z);

        e.r = sw * r;
        e.jt = sw * jpi * (rct * dz_dtraj);
        e.je = sw * jpi * dy_dext;
        e.jp = sw * jpi * (rct * rwt);
        e.raw_norm = r.norm();
        return e;
    }

    const RigConfig& rig_;
    SfmConfig cfg_;
    int ref_cam_ = 0;
};

} // namespace rigsfm
