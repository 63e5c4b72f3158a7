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

#include <map>
#include <set>
#include <vector>

#include "rigsfm/ba.hpp"
#include "rigsfm/essential.hpp"
#include "rigsfm/rig.hpp"
#include "rigsfm/tracks.hpp"
#include "rigsfm/triangulate.hpp"

namespace rigsfm {

/// Verified image pair: the RANSAC-surviving correspondences plus the
/// essential matrix they agreed on.
struct VerifiedPair {
    FrameKey a, b;
    Mat3 essential = Mat3::Zero();
    std::vector<PairCorrespondence> inliers;
};

struct ReconPoint {
    Vec3 x = Vec3::Zero();
    Track track;
};

struct Reconstruction {
    std::vector<int> times;                  // sorted timestamps with rig poses
    std::vector<RigidPose> rig_trajectory;   // world_from_rig, aligned with times
    std::vector<RigidPose> local_extrinsics; // rig_from_camera, per rig camera
    std::vector<ReconPoint> points;
    std::set<FrameKey> registered;

    int time_index(int t) const {
        const auto it = std::lower_bound(times.begin(), times.end(), t);
        if (it == times.end() || *it != t) return -1;
        return static_cast<int>(it - times.begin());
    }
};

struct SfmMetrics {
    double r_reg = 0.0;
    std::int64_t n_pts = 0;
    double l_track = 0.0;
    double e_reproj = 0.0;
    bool empty = true;
};

namespace detail {

// Median angular displacement between matched bearings; small values mean the
// pair carries no usable motion.
inline double median_bearing_motion(const std::vector<Vec3>& ba, const std::vector<Vec3>& bb) {
    std::vector<double> angles;
    angles.reserve(ba.size());
    for (std::size_t i = 0; i < ba.size(); ++i)
        angles.push_back(std::acos(std::clamp(ba[i].dot(bb[i]), -1.0, 1.0)));
    std::nth_element(angles.begin(), angles.begin() + angles.size() / 2, angles.end());
    return angles[angles.size() / 2];
}

// Pick the cheirality-consistent (R, t) factorization by vote.
inline std::pair<Mat3, Vec3> pick_relative_pose(const Mat3& e, const std::vector<Vec3>& ba,
                                                const std::vector<Vec3>& bb) {
    const auto candidates = decompose_essential(e);
    int best_votes = -1;
    std::pair<Mat3, Vec3> best = candidates[0];
    for (const auto& [r, t] : candidates) {
        int votes = 0;
        for (std::size_t i = 0; i < ba.size(); ++i) {
            const auto [da, db] = two_view_depths(r, t, ba[i], bb[i]);
            if (da > 0.0 && db > 0.0) ++votes;
        }
        if (votes > best_votes) {
            best_votes = votes;
            best = {r, t};
        }
    }
    return best;
}

struct QuantKey {
    int cam, t;
    std::int64_t bx, by;
    auto operator<=>(const QuantKey&) const = default;
};

inline QuantKey quant_key(const FrameKey& f, const Vec2& px, double q = 1.0) {
    return {f.cam, f.t, static_cast<std::int64_t>(std::floor(px.x() / q)),
            static_cast<std::int64_t>(std::floor(px.y() / q))};
}

} // namespace detail

/// Global initialization: local extrinsics from the priors, per-time rig
/// poses chained from essential-matrix relative motions on temporal pairs,
/// with metric step scale recovered from structure triangulated through the
/// prior-known same-time cross-camera baselines. Near-static steps snap to
/// the identity. Tracks are then triangulated through the rejection gates.
inline Reconstruction initialize(const std::vector<VerifiedPair>& pairs, const RigConfig& rig,
                                 const SfmConfig& cfg = {}) {
    if (pairs.empty()) throw ValidationError("initialize: no verified pairs");

    // largest connected component of the frame graph
    std::map<FrameKey, int> comp;
    {
        std::map<FrameKey, std::vector<FrameKey>> adj;
        for (const auto& p : pairs) {
            adj[p.a].push_back(p.b);
            adj[p.b].push_back(p.a);
        }
        int n_comp = 0;
        for (const auto& [f, _] : adj) {
            if (comp.count(f)) continue;
            std::vector<FrameKey> stack{f};
            comp[f] = n_comp;
            while (!stack.empty()) {
                const FrameKey cur = stack.back();
                stack.pop_back();
                for (const auto& nb : adj[cur])
                    if (!comp.count(nb)) {
                        comp[nb] = n_comp;
                        stack.push_back(nb);
                    }
            }
            ++n_comp;
        }
        std::vector<int> sizes(n_comp, 0);
        for (const auto& [f, c] : comp) ++sizes[c];
        const int biggest =
            static_cast<int>(std::max_element(sizes.begin(), sizes.end()) - sizes.begin());
        const int ref = rig.reference_index();
        bool has_ref = false;
        for (const auto& [f, c] : comp)
            if (c == biggest && f.cam == ref) has_ref = true;
        if (!has_ref)
            throw ValidationError(
                "initialize: largest connected component contains no reference-camera frame");
        for (auto it = comp.begin(); it != comp.end();)
            it = (it->second == biggest) ? std::next(it) : comp.erase(it);
    }
    auto in_component = [&](const FrameKey& f) { return comp.count(f) > 0; };

    Reconstruction recon;
    for (const auto& cam : rig.cameras) recon.local_extrinsics.push_back(cam.prior);

    std::set<int> time_set;
    for (const auto& [f, c] : comp) time_set.insert(f.t);
    recon.times.assign(time_set.begin(), time_set.end());
    if (recon.times.empty()) throw ValidationError("initialize: no usable frames");

    // metric structure per time from same-time cross-camera pairs
    auto metric_points_at = [&](int t) {
        std::map<detail::QuantKey, Vec3> out; // key in frame (cam, t) -> point in rig(t)
        for (const auto& p : pairs) {
            if (p.a.t != t || p.b.t != t || p.a.cam == p.b.cam) continue;
            if (!in_component(p.a) || !in_component(p.b)) continue;
            const RigidPose& pa = rig.cameras[p.a.cam].prior; // rig_from_cam
            const RigidPose& pb = rig.cameras[p.b.cam].prior;
            for (const auto& c : p.inliers) {
                Vec3 ua, ub;
                try {
                    ua = unproject(c.xa, rig.cameras[p.a.cam].intrinsics);
                    ub = unproject(c.xb, rig.cameras[p.b.cam].intrinsics);
                } catch (const ValidationError&) {
                    continue;
                }
                const std::vector<Ray> rays{{pa.translation, pa.rotation * ua},
                                            {pb.translation, pb.rotation * ub}};
                // parallax gate only; reprojection is rechecked globally later
                const double ang = std::acos(std::clamp(rays[0].dir.dot(rays[1].dir), -1.0, 1.0));
                if (ang < cfg.min_triangulation_angle) continue;
                const auto x = midpoint_triangulate(rays);
                if (!x) continue;
                // in front of both cameras
                if ((pa.inverse().act(*x)).z() <= 0.0 || (pb.inverse().act(*x)).z() <= 0.0)
                    continue;
                out.emplace(detail::quant_key(p.a, c.xa), *x);
                out.emplace(detail::quant_key(p.b, c.xb), *x);
            }
        }
        return out;
    };

    // chain rig poses over consecutive times
    recon.rig_trajectory.assign(recon.times.size(), RigidPose::identity());
    double last_scale = 0.0;
    for (std::size_t ti = 0; ti + 1 < recon.times.size(); ++ti) {
        const int t1 = recon.times[ti];
        const int t2 = recon.times[ti + 1];

        const VerifiedPair* chosen = nullptr;
        for (const auto& p : pairs) {
            if (p.a.cam != p.b.cam) continue;
            const bool fwd = p.a.t == t1 && p.b.t == t2;
            const bool bwd = p.a.t == t2 && p.b.t == t1;
            if (!fwd && !bwd) continue;
            if (!in_component(p.a) || !in_component(p.b)) continue;
            if (!chosen || p.inliers.size() > chosen->inliers.size()) chosen = &p;
        }

        RigidPose delta = RigidPose::identity(); // rig(t1) -> rig(t2) step: T_wr(t2) = T_wr(t1) * delta
        if (chosen && chosen->inliers.size() >= 8) {
            const bool fwd = chosen->a.t == t1;
            const auto& intr = rig.cameras[chosen->a.cam].intrinsics;
            std::vector<Vec3> b1, b2; // bearings at t1 and t2 in camera c
            std::vector<Vec2> px1, px2;
            for (const auto& c : chosen->inliers) {
                try {
                    const Vec3 ua = unproject(c.xa, intr);
                    const Vec3 ub = unproject(c.xb, intr);
                    b1.push_back(fwd ? ua : ub);
                    b2.push_back(fwd ? ub : ua);
                    px1.push_back(fwd ? c.xa : c.xb);
                    px2.push_back(fwd ? c.xb : c.xa);
                } catch (const ValidationError&) {
                    continue;
                }
            }
            if (b1.size() >= 8 && detail::median_bearing_motion(b1, b2) > 1e-4) {
                Mat3 e;
                try {
                    e = eight_point_essential(b1, b2).e;
                } catch (const NumericalError&) {
                    e = Mat3::Zero();
                }
                if (e.norm() > 0.0) {
                    const auto [r_m, t_dir] = detail::pick_relative_pose(e, b1, b2);
                    // metric scale from prior-baseline structure at t1
                    const auto metric = metric_points_at(t1);
                    const int cam = chosen->a.cam;
                    const RigidPose& trc = rig.cameras[cam].prior;
                    double num = 0.0, den = 0.0;
                    int links = 0;
                    for (std::size_t i = 0; i < b1.size(); ++i) {
                        const auto it = metric.find(
                            detail::quant_key(FrameKey{cam, t1}, px1[i]));
                        if (it == metric.end()) continue;
                        const Vec3 y1 = trc.inverse().act(it->second); // cam(t1) frame
                        const Vec3 a_vec = (Mat3::Identity() - b2[i] * b2[i].transpose()) *
                                           (r_m * y1);
                        const Vec3 b_vec = (Mat3::Identity() - b2[i] * b2[i].transpose()) * t_dir;
                        num += a_vec.dot(b_vec);
                        den += b_vec.squaredNorm();
                        ++links;
                    }
                    double scale = last_scale;
                    if (links >= 5 && den > 1e-12) scale = -num / den;
                    last_scale = scale;
                    // camera-frame step M = cam(t2)_from_cam(t1); delta = T_rc M^-1 T_rc^-1
                    const RigidPose m = RigidPose::from_parts_unchecked(r_m, scale * t_dir);
                    delta = trc * m.inverse() * trc.inverse();
                }
            }
        }
        recon.rig_trajectory[ti + 1] = recon.rig_trajectory[ti] * delta;
    }

    // tracks from all in-component correspondences, then gated triangulation
    std::vector<PairCorrespondence> correspondences;
    for (const auto& p : pairs) {
        if (!in_component(p.a) || !in_component(p.b)) continue;
        for (const auto& c : p.inliers) correspondences.push_back(c);
    }
    const auto tracks = build_tracks(correspondences);

    const TriangulationGates gates{cfg.min_triangulation_angle, cfg.max_reprojection_px};
    for (const auto& track : tracks) {
        std::vector<Ray> rays;
        std::vector<RigidPose> poses;
        std::vector<const FisheyeIntrinsics*> intrs;
        std::vector<Vec2> pixels;
        Track kept;
        for (const auto& obs : track.observations) {
            const int tidx = recon.time_index(obs.frame.t);
            if (tidx < 0 || !in_component(obs.frame)) continue;
            const auto& intr = rig.cameras[obs.frame.cam].intrinsics;
            Vec3 bearing;
            try {
                bearing = unproject(obs.pixel, intr);
            } catch (const ValidationError&) {
                continue;
            }
            const RigidPose wfc =
                rig_absolute_pose(recon.rig_trajectory[tidx], recon.local_extrinsics[obs.frame.cam]);
            rays.push_back({wfc.translation, wfc.rotation * bearing});
            poses.push_back(wfc);
            intrs.push_back(&intr);
            pixels.push_back(obs.pixel);
            kept.observations.push_back(obs);
        }
        if (kept.observations.size() < 2) continue;
        const auto x = triangulate_track(rays, poses, intrs, pixels, gates);
        if (!x) continue;
        kept.match_ids = track.match_ids;
        recon.points.push_back({*x, std::move(kept)});
    }

    for (const auto& pt : recon.points)
        for (const auto& obs : pt.track.observations) recon.registered.insert(obs.frame);
    return recon;
}

/// Run the rig-factorized bundle adjustment on a reconstruction, pruning
/// gross observations between rounds. Points left with fewer than two
/// observations are dropped, and the registered set is recomputed.
inline BaReport bundle_adjust(Reconstruction& recon, const RigConfig& rig, const SfmConfig& cfg) {
    BaState state;
    state.trajectory = recon.rig_trajectory;
    state.extrinsics = recon.local_extrinsics;
    std::vector<BaObservation> obs;
    std::vector<char> valid;
    for (std::size_t p = 0; p < recon.points.size(); ++p) {
        state.points.push_back(recon.points[p].x);
        for (const auto& o : recon.points[p].track.observations) {
            const int tidx = recon.time_index(o.frame.t);
            if (tidx < 0) throw ValidationError("bundle_adjust: observation at unknown time");
            obs.push_back({tidx, o.frame.cam, static_cast<int>(p), o.pixel});
            valid.push_back(1);
        }
    }

    RigBundleAdjuster adjuster(rig, cfg);
    const BaReport report = adjuster.adjust(state, obs, valid);

    recon.rig_trajectory = state.trajectory;
    recon.local_extrinsics = state.extrinsics;

    // rebuild points/tracks from the surviving observations
    std::vector<ReconPoint> points;
    std::vector<Track> new_tracks(recon.points.size());
    std::vector<int> kept_count(recon.points.size(), 0);
    for (std::size_t i = 0; i < obs.size(); ++i) {
        if (!valid[i]) continue;
        const auto& o = obs[i];
        new_tracks[o.point].observations.push_back({FrameKey{o.cam, recon.times[o.traj]}, o.pixel});
        ++kept_count[o.point];
    }
    recon.registered.clear();
    for (std::size_t p = 0; p < recon.points.size(); ++p) {
        if (kept_count[p] < 2) continue;
        ReconPoint pt;
        pt.x = state.points[p];
        pt.track = std::move(new_tracks[p]);
        pt.track.match_ids = recon.points[p].track.match_ids;
        for (const auto& o : pt.track.observations) recon.registered.insert(o.frame);
        points.push_back(std::move(pt));
    }
    recon.points = std::move(points);
    return report;
}

/// Registration rate, point count, mean track length, mean fisheye
/// reprojection error over every observation.
inline SfmMetrics compute_metrics(const Reconstruction& recon, const RigConfig& rig,
                                  std::int64_t extracted_frames) {
    SfmMetrics m;
    if (recon.points.empty()) return m;
    m.empty = false;
    m.n_pts = static_cast<std::int64_t>(recon.points.size());
    m.r_reg = extracted_frames > 0
                  ? static_cast<double>(recon.registered.size()) / static_cast<double>(extracted_frames)
                  : 0.0;

    std::int64_t n_obs = 0;
    double track_sum = 0.0;
    double err_sum = 0.0;
    for (const auto& pt : recon.points) {
        track_sum += static_cast<double>(pt.track.observations.size());
        for (const auto& o : pt.track.observations) {
            const int tidx = recon.time_index(o.frame.t);
            if (tidx < 0) throw ValidationError("compute_metrics: observation at unknown time");
            const RigidPose wfc = rig_absolute_pose(recon.rig_trajectory[tidx],
                                                    recon.local_extrinsics[o.frame.cam]);
            double err = 0.0;
            try {
                const Vec2 proj =
                    project(wfc.inverse().act(pt.x), rig.cameras[o.frame.cam].intrinsics);
                err = (proj - o.pixel).norm();
            } catch (const ValidationError&) {
                err = std::numeric_limits<double>::infinity();
            }
            err_sum += err;
            ++n_obs;
        }
    }
    m.l_track = track_sum / static_cast<double>(m.n_pts);
    m.e_reproj = n_obs > 0 ? err_sum / static_cast<double>(n_obs) : 0.0;
    return m;
}

} // namespace rigsfm
