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
#include "rigsfm/essential.hpp"
#include "rigsfm/matches.hpp"
#include "rigsfm/rng.hpp"

namespace rigsfm {

struct RansacConfig {
    double threshold = 2e-3;       // angular epipolar residual, rad
    int max_iters = 2000;
    double confidence = 0.999;     // adaptive stopping
    double min_inlier_ratio = 0.15;
    std::uint64_t seed = 0;

    void validate() const {
        if (!(threshold > 0.0)) throw ValidationError("ransac: threshold must be positive");
        if (max_iters < 1) throw ValidationError("ransac: max_iters must be >= 1");
        if (!(confidence > 0.0 && confidence < 1.0))
            throw ValidationError("ransac: confidence must lie in (0,1)");
        if (!(min_inlier_ratio >= 0.0 && min_inlier_ratio <= 1.0))
            throw ValidationError("ransac: min_inlier_ratio outside [0,1]");
    }
};

struct VerifyResult {
    bool ok = false; // false: pair dropped (inlier ratio below minimum)
    EssentialModel model;
    std::vector<char> inlier; // per input match
    int n_inliers = 0;
};

namespace detail {

inline double mean_residual(const Mat3& e, const std::vector<Vec3>& ba,
                            const std::vector<Vec3>& bb, const std::vector<char>& sel) {
    double sum = 0.0;
    int n = 0;
    for (std::size_t i = 0; i < ba.size(); ++i) {
        if (!sel[i]) continue;
        sum += epipolar_residual(e, ba[i], bb[i]);
        ++n;
    }
    return n > 0 ? sum / n : 0.0;
}

} // namespace detail

/// RANSAC verification of a filtered match set in bearing space: 8-point
/// hypotheses on minimal samples, angular inlier test, local refit on the
/// best consensus set (kept only if it does not worsen the mean residual).
/// Deterministic for a fixed seed.
inline VerifyResult ransac_verify(const FilteredMatchSet& matches, const FisheyeIntrinsics& intr_a,
                                  const FisheyeIntrinsics& intr_b, const RansacConfig& cfg) {
    cfg.validate();
    const std::size_t n = matches.size();
    if (n < 8) throw ValidationError("ransac_verify: need at least 8 matches");

    std::vector<Vec3> ba(n), bb(n);
    for (std::size_t i = 0; i < n; ++i) {
        ba[i] = unproject(matches[i].m.xa, intr_a);
        bb[i] = unproject(matches[i].m.xb, intr_b);
    }

    Rng rng(cfg.seed);
    VerifyResult best;
    best.inlier.assign(n, 0);
    double best_mean_res = std::numeric_limits<double>::infinity();
    double iters_needed = cfg.max_iters;

    std::vector<Vec3> sa(8), sb(8);
    for (int it = 0; it < cfg.max_iters && it < iters_needed; ++it) {
        const auto idx = rng.sample_indices(n, 8);
        for (int i = 0; i < 8; ++i) {
            sa[i] = ba[idx[i]];
            sb[i] = bb[idx[i]];
        }
        EssentialModel hyp;
        try {
            hyp = eight_point_essential(sa, sb);
        } catch (const NumericalError&) {
            continue;
        }
        std::vector<char> inl(n, 0);
        int count = 0;
        double res_sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double r = epipolar_residual(hyp.e, ba[i], bb[i]);
            if (r < cfg.threshold) {
                inl[i] = 1;
                ++count;
                res_sum += r;
            }
        }
        const double mean_res = count > 0 ? res_sum / count : 0.0;
        if (count > best.n_inliers ||
            (count == best.n_inliers && count > 0 && mean_res < best_mean_res)) {
            best.n_inliers = count;
            best.inlier = std::move(inl);
            best.model = hyp;
            best_mean_res = mean_res;
            const double w = static_cast<double>(count) / static_cast<double>(n);
            const double denom = std::log(std::max(1e-12, 1.0 - std::pow(w, 8)));
            iters_needed = denom < 0.0 ? std::log(1.0 - cfg.confidence) / denom
                                       : static_cast<double>(cfg.max_iters);
        }
    }

    if (best.n_inliers < 8 ||
        static_cast<double>(best.n_inliers) / static_cast<double>(n) < cfg.min_inlier_ratio) {
        best.ok = false;
        return best;
    }

    // threshold-annealed local optimization: refit through a widening gate,
    // adopt the result only if it classifies more inliers at the working
    // threshold (ties broken by mean residual)
    {
        EssentialModel anneal = best.model;
        bool usable = true;
        for (double mult : {4.0, 2.0, 1.0}) {
            std::vector<Vec3> sa_, sb_;
            for (std::size_t i = 0; i < n; ++i)
                if (epipolar_residual(anneal.e, ba[i], bb[i]) < mult * cfg.threshold) {
                    sa_.push_back(ba[i]);
                    sb_.push_back(bb[i]);
                }
            if (sa_.size() < 8) {
                usable = false;
                break;
            }
            try {
                anneal = eight_point_essential(sa_, sb_);
            } catch (const NumericalError&) {
                usable = false;
                break;
            }
        }
        if (usable) {
            std::vector<char> inl(n, 0);
            int count = 0;
            double res_sum = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double r = epipolar_residual(anneal.e, ba[i], bb[i]);
                if (r < cfg.threshold) {
                    inl[i] = 1;
                    ++count;
                    res_sum += r;
                }
            }
            const double mean_res = count > 0 ? res_sum / count : 0.0;
            if (count > best.n_inliers || (count == best.n_inliers && mean_res < best_mean_res)) {
                best.model = anneal;
                best.inlier = std::move(inl);
                best.n_inliers = count;
            }
        }
    }

    // refit on the consensus set, iterated while the set keeps growing; a
    // refit is kept only if it does not worsen the consensus mean residual
    for (int round = 0; round < 3; ++round) {
        std::vector<Vec3> ia, ib;
        ia.reserve(best.n_inliers);
        ib.reserve(best.n_inliers);
        for (std::size_t i = 0; i < n; ++i)
            if (best.inlier[i]) {
                ia.push_back(ba[i]);
                ib.push_back(bb[i]);
            }
        if (ia.size() < 8) break;
        EssentialModel refit;
        try {
            refit = eight_point_essential(ia, ib);
        } catch (const NumericalError&) {
            break;
        }
        const double before = detail::mean_residual(best.model.e, ba, bb, best.inlier);
        const double after = detail::mean_residual(refit.e, ba, bb, best.inlier);
        if (after > before) break;
        best.model = refit;
        std::vector<char> inl(n, 0);
        int count = 0;
        for (std::size_t i = 0; i < n; ++i)
            if (epipolar_residual(best.model.e, ba[i], bb[i]) < cfg.threshold) {
                inl[i] = 1;
                ++count;
            }
        const bool unchanged = (inl == best.inlier);
        best.inlier = std::move(inl);
        best.n_inliers = count;
        if (unchanged) break;
    }

    // final inlier classification under the chosen model
    best.n_inliers = 0;
    for (std::size_t i = 0; i < n; ++i) {
        best.inlier[i] = epipolar_residual(best.model.e, ba[i], bb[i]) < cfg.threshold ? 1 : 0;
        best.n_inliers += best.inlier[i];
    }
    best.ok = best.n_inliers >= 8 &&
              static_cast<double>(best.n_inliers) / static_cast<double>(n) >= cfg.min_inlier_ratio;
    return best;
}

} // namespace rigsfm
