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

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "rigsfm/errors.hpp"
#include "rigsfm/mask.hpp"

namespace rigsfm {

struct InstanceProposal {
    MaskRaster mask;
    double det_score = 0.0;

    InstanceProposal() = default;
    InstanceProposal(MaskRaster m, double det) : mask(std::move(m)), det_score(det) {
        if (!(det_score >= 0.0 && det_score <= 1.0))
            throw ValidationError("InstanceProposal: det_score outside [0,1]");
    }
};

struct GateConfig {
    double tau_track = 0.3;        // IoU lock threshold
    int max_gap = 5;               // G: consecutive failures before halting
    double boundary_fraction = 0.1;
    int top_k_anchors = 5;
    int closing_radius = 2;        // temporal closing of the presence signal
    double area_ema_alpha = 0.2;   // running reference area update
    double min_area_ratio = 0.35;  // anti-drift size constraint
    double iou_epsilon = 1e-6;
    int smoothing_window = 5;      // moving average over motion energies
    bool use_motion_gating = true; // ablation switch: drop the motion terms

    void validate() const {
        if (!(tau_track >= 0.0 && tau_track <= 1.0)) throw ValidationError("gate: tau_track outside [0,1]");
        if (max_gap < 0) throw ValidationError("gate: max_gap negative");
        if (!(boundary_fraction >= 0.0 && boundary_fraction < 0.5))
            throw ValidationError("gate: boundary_fraction outside [0,0.5)");
        if (top_k_anchors < 1) throw ValidationError("gate: top_k_anchors < 1");
        if (closing_radius < 0) throw ValidationError("gate: closing_radius negative");
        if (!(area_ema_alpha >= 0.0 && area_ema_alpha <= 1.0))
            throw ValidationError("gate: area_ema_alpha outside [0,1]");
        if (!(min_area_ratio >= 0.0 && min_area_ratio <= 1.0))
            throw ValidationError("gate: min_area_ratio outside [0,1]");
        if (!(iou_epsilon > 0.0)) throw ValidationError("gate: iou_epsilon must be positive");
        if (smoothing_window < 1 || smoothing_window % 2 == 0)
            throw ValidationError("gate: smoothing_window must be odd and >= 1");
    }
};

struct TrackState {
    double reference_area = 0.0; // 0 until initialized at the anchor
    MaskRaster previous_mask;    // empty dims until initialized
    int gap_count = 0;
};

/// min/max area ratio in [0,1]; 0 when no reference exists yet.
inline double area_similarity(double area, double reference_area) {
    if (!(reference_area > 0.0)) return 0.0;
    const double lo = std::min(area, reference_area);
    const double hi = std::max(area, reference_area);
    return hi > 0.0 ? lo / hi : 0.0;
}

/// Centered moving average, truncated at the sequence boundaries.
inline std::vector<double> smooth_energies(const std::vector<double>& e, int window) {
    const int n = static_cast<int>(e.size());
    const int r = window / 2;
    std::vector<double> out(e.size());
    for (int i = 0; i < n; ++i) {
        const int lo = std::max(0, i - r);
        const int hi = std::min(n - 1, i + r);
        double s = 0.0;
        for (int j = lo; j <= hi; ++j) s += e[j];
        out[i] = s / (hi - lo + 1);
    }
    return out;
}

namespace detail {

struct AnchorRange {
    int lo, hi; // [lo, hi)
};

inline AnchorRange anchor_range(int n, double boundary_fraction) {
    const int margin = static_cast<int>(std::ceil(n * boundary_fraction));
    return {margin, n - margin};
}

} // namespace detail

/// Index of peak smoothed motion energy, restricted to the boundary-excluded
/// range; ties break to the earliest index.
inline int select_anchor(const std::vector<double>& energies, const GateConfig& cfg) {
    const int n = static_cast<int>(energies.size());
    if (n < 3) throw ValidationError("select_anchor: need at least 3 frames");
    if (std::all_of(energies.begin(), energies.end(), [](double v) { return v == 0.0; }))
        throw ValidationError("select_anchor: no motion in sequence");
    const auto smoothed = smooth_energies(energies, cfg.smoothing_window);
    const auto [lo, hi] = detail::anchor_range(n, cfg.boundary_fraction);
    if (lo >= hi) throw ValidationError("select_anchor: boundary exclusion leaves no frames");
    int best = lo;
    for (int i = lo + 1; i < hi; ++i)
        if (smoothed[i] > smoothed[best]) best = i;
    return best;
}

/// Anchor/track selection score:
///   6 IoU(S, B) + 2 IoU(S, M_prev) + 0.10 log(|S|+1) + 0.75 AreaSim + 0.25 DetScore
/// with natural log. The motion term is dropped when motion gating is disabled.
inline double score_instance(const InstanceProposal& candidate, const MaskRaster& motion,
                             const MaskRaster& prev, const TrackState& state,
                             const GateConfig& cfg = {}) {
    double s = 0.0;
    if (cfg.use_motion_gating && !motion.empty_dims())
        s += 6.0 * iou(candidate.mask, motion, cfg.iou_epsilon);
    if (!prev.empty_dims()) s += 2.0 * iou(candidate.mask, prev, cfg.iou_epsilon);
    const double area = static_cast<double>(candidate.mask.area());
    s += 0.10 * std::log(area + 1.0);
    s += 0.75 * area_similarity(area, state.reference_area);
    s += 0.25 * candidate.det_score;
    return s;
}

struct TrackResult {
    std::vector<MaskRaster> masks; // one per frame; empty (all-zero) outside the track
    int anchor_frame = -1;
    int interval_start = -1; // inclusive; -1/-2 pair when nothing tracked
    int interval_end = -2;   // inclusive
};

namespace detail {

// 1D binary closing: dilate then erode with the given radius.
inline std::vector<char> close_presence(const std::vector<char>& p, int radius) {
    const int n = static_cast<int>(p.size());
    std::vector<char> dil(n, 0), out(n, 0);
    for (int i = 0; i < n; ++i) {
        if (!p[i]) continue;
        for (int j = std::max(0, i - radius); j <= std::min(n - 1, i + radius); ++j) dil[j] = 1;
    }
    for (int i = 0; i < n; ++i) {
        bool all = true;
        for (int j = i - radius; j <= i + radius && all; ++j)
            if (j >= 0 && j < n && !dil[j]) all = false;
        out[i] = all ? 1 : 0;
    }
    return out;
}

} // namespace detail

/// Anchor-locked tracking over per-frame instance proposals.
///
/// The anchor is the best Eq-style scored instance among the top-K candidate
/// frames near peak motion. Tracking then runs backward and forward under a
/// strict lock: IoU with the previous mask >= tau_track AND area >=
/// min_area_ratio * running reference area. More than max_gap consecutive
/// failures halt that direction. The presence signal is temporally closed and
/// frames outside the active interval carry blank masks.
inline TrackResult track_sequence(const std::vector<std::vector<InstanceProposal>>& proposals,
                                  const std::vector<MaskRaster>& motions, const GateConfig& cfg) {
    cfg.validate();
    const int n = static_cast<int>(proposals.size());
    if (n == 0 || motions.size() != proposals.size())
        throw ValidationError("track_sequence: proposals and motions must align");

    // candidate anchor frames
    std::vector<int> candidates;
    if (cfg.use_motion_gating) {
        std::vector<double> energies(n);
        for (int i = 0; i < n; ++i) energies[i] = motion_energy(motions[i]);
        if (std::all_of(energies.begin(), energies.end(), [](double v) { return v == 0.0; }))
            throw ValidationError("track_sequence: no motion, no anchor found");
        const auto smoothed = smooth_energies(energies, cfg.smoothing_window);
        const auto [lo, hi] = detail::anchor_range(n, cfg.boundary_fraction);
        std::vector<int> order;
        for (int i = lo; i < hi; ++i) order.push_back(i);
        std::stable_sort(order.begin(), order.end(),
                         [&](int a, int b) { return smoothed[a] > smoothed[b]; });
        for (int i = 0; i < std::min<int>(cfg.top_k_anchors, static_cast<int>(order.size())); ++i)
            candidates.push_back(order[i]);
    } else {
        const auto [lo, hi] = detail::anchor_range(n, cfg.boundary_fraction);
        for (int i = lo; i < hi; ++i) candidates.push_back(i);
    }

    // best instance over candidate frames
    int anchor = -1, anchor_idx = -1;
    double anchor_score = -std::numeric_limits<double>::infinity();
    const TrackState blank_state;
    const MaskRaster no_prev;
    for (int f : candidates) {
        for (std::size_t i = 0; i < proposals[f].size(); ++i) {
            if (proposals[f][i].mask.area() == 0) continue;
            const double s = score_instance(proposals[f][i], motions[f], no_prev, blank_state, cfg);
            if (s > anchor_score) {
                anchor_score = s;
                anchor = f;
                anchor_idx = static_cast<int>(i);
            }
        }
    }
    if (anchor < 0) throw ValidationError("track_sequence: no target found at any anchor frame");

    TrackResult res;
    const MaskRaster& first = proposals[anchor][anchor_idx].mask;
    res.masks.assign(n, MaskRaster(first.width(), first.height()));
    res.anchor_frame = anchor;
    res.masks[anchor] = first;
    std::vector<char> presence(n, 0);
    presence[anchor] = 1;

    auto run_direction = [&](int step) {
        TrackState state;
        state.reference_area = static_cast<double>(first.area());
        state.previous_mask = first;
        for (int f = anchor + step; f >= 0 && f < n; f += step) {
            int best = -1;
            double best_score = -std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < proposals[f].size(); ++i) {
                const auto& cand = proposals[f][i];
                const double a = static_cast<double>(cand.mask.area());
                if (a <= 0.0) continue;
                if (iou(cand.mask, state.previous_mask, cfg.iou_epsilon) < cfg.tau_track) continue;
                if (a < cfg.min_area_ratio * state.reference_area) continue;
                const double s = score_instance(cand, motions[f], state.previous_mask, state, cfg);
                if (s > best_score) {
                    best_score = s;
                    best = static_cast<int>(i);
                }
            }
            if (best < 0) {
                if (++state.gap_count > cfg.max_gap) break;
                continue;
            }
            state.gap_count = 0;
            const auto& chosen = proposals[f][best].mask;
            res.masks[f] = chosen;
            presence[f] = 1;
            state.previous_mask = chosen;
            state.reference_area = (1.0 - cfg.area_ema_alpha) * state.reference_area +
                                   cfg.area_ema_alpha * static_cast<double>(chosen.area());
        }
    };
    run_direction(+1);
    run_direction(-1);

    // temporal closing; the active interval is the closed run containing the anchor
    const auto closed = detail::close_presence(presence, cfg.closing_radius);
    int start = anchor, end = anchor;
    while (start - 1 >= 0 && closed[start - 1]) --start;
    while (end + 1 < n && closed[end + 1]) ++end;
    res.interval_start = start;
    res.interval_end = end;
    for (int f = 0; f < n; ++f)
        if (f < start || f > end)
            res.masks[f] = MaskRaster(res.masks[f].width(), res.masks[f].height());
    return res;
}

} // namespace rigsfm
