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
#include <cstdint>
#include <map>
#include <vector>

#include "rigsfm/errors.hpp"
#include "rigsfm/mask.hpp"
#include "rigsfm/se3.hpp"

namespace rigsfm {

/// One raw correspondence: pixel pair, overlap confidence, and both
/// directional precisions. `id` is an optional provenance tag carried through
/// the pipeline (-1 when absent).
struct MatchRecord {
    Vec2 xa = Vec2::Zero();
    Vec2 xb = Vec2::Zero();
    double o = 0.0;
    double pab = 0.0;
    double pba = 0.0;
    std::int64_t id = -1;

    void validate() const {
        auto in01 = [](double v) { return v >= 0.0 && v <= 1.0; };
        if (!in01(o) || !in01(pab) || !in01(pba))
            throw ValidationError("match: confidences must lie in [0,1]");
    }
};

using RawMatchSet = std::vector<MatchRecord>;

struct FilterConfig {
    double tau_s = 0.3;   // score threshold
    int grid_cell = 32;   // g, pixels
    int keep_per_cell = 2; // K_cell
    int quantum = 4;      // q, pixels
    int n_max = 4096;     // cap

    void validate() const {
        if (!(tau_s >= 0.0)) throw ValidationError("filter: tau_s must be non-negative");
        if (grid_cell < 1 || keep_per_cell < 1 || quantum < 1 || n_max < 1)
            throw ValidationError("filter: g, K_cell, q, N_max must be positive");
    }
};

/// Symmetric confidence score s_i = o_i * min(p_ab, p_ba).
inline double match_score(const MatchRecord& m) { return m.o * std::min(m.pab, m.pba); }

inline std::vector<double> score_matches(const RawMatchSet& raw) {
    std::vector<double> s(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) s[i] = match_score(raw[i]);
    return s;
}

/// Overlap confidence gated by the rigid mask: zero outside.
inline double gate_overlap(double overlap, bool mask_value) {
    return mask_value ? overlap : 0.0;
}

struct ScoredMatch {
    MatchRecord m;
    double s = 0.0;
};

using FilteredMatchSet = std::vector<ScoredMatch>;

namespace detail {

// Canonical tie-break order: coordinates, then confidences.
inline bool canonical_less(const MatchRecord& a, const MatchRecord& b) {
    const auto ka = std::tuple(a.xa.x(), a.xa.y(), a.xb.x(), a.xb.y(), a.o, a.pab, a.pba);
    const auto kb = std::tuple(b.xa.x(), b.xa.y(), b.xb.x(), b.xb.y(), b.o, b.pab, b.pba);
    return ka < kb;
}

inline bool score_then_canonical(const ScoredMatch& a, const ScoredMatch& b) {
    if (a.s != b.s) return a.s > b.s;
    return canonical_less(a.m, b.m);
}

} // namespace detail

/// Alg-1 style post-filter, in exactly this order:
///   1. keep s_i >= tau_s and both endpoints inside the rigid masks,
///   2. top-K per g x g cell (cells on image A) by score,
///   3. quantize both endpoints by q and drop every match sharing a bin in
///      either image (mutual uniqueness: non-bijective mappings are removed),
///   4. cap to the N_max highest-scoring matches.
/// Output is canonically ordered and independent of input order.
inline FilteredMatchSet filter_matches(const RawMatchSet& raw, const MaskRaster& rigid_a,
                                       const MaskRaster& rigid_b, const FilterConfig& cfg) {
    cfg.validate();
    FilteredMatchSet stage1;
    stage1.reserve(raw.size());
    for (const auto& m : raw) {
        m.validate();
        const double s = match_score(m);
        if (s < cfg.tau_s) continue;
        if (!rigid_a.contains(m.xa.x(), m.xa.y())) continue;
        if (!rigid_b.contains(m.xb.x(), m.xb.y())) continue;
        stage1.push_back({m, s});
    }

    // stage 2: spatial thinning on image A
    std::map<std::pair<std::int64_t, std::int64_t>, std::vector<std::size_t>> cells;
    for (std::size_t i = 0; i < stage1.size(); ++i) {
        const auto cell = std::pair(static_cast<std::int64_t>(stage1[i].m.xa.x()) / cfg.grid_cell,
                                    static_cast<std::int64_t>(stage1[i].m.xa.y()) / cfg.grid_cell);
        cells[cell].push_back(i);
    }
    FilteredMatchSet stage2;
    for (auto& [cell, idxs] : cells) {
        std::sort(idxs.begin(), idxs.end(), [&](std::size_t a, std::size_t b) {
            return detail::score_then_canonical(stage1[a], stage1[b]);
        });
        for (std::size_t i = 0; i < idxs.size() && i < static_cast<std::size_t>(cfg.keep_per_cell); ++i)
            stage2.push_back(stage1[idxs[i]]);
    }

    // stage 3: bijectivity under q-quantization
    std::map<std::pair<std::int64_t, std::int64_t>, int> bins_a, bins_b;
    auto bin = [&](const Vec2& p) {
        return std::pair(static_cast<std::int64_t>(p.x()) / cfg.quantum,
                         static_cast<std::int64_t>(p.y()) / cfg.quantum);
    };
    for (const auto& sm : stage2) {
        ++bins_a[bin(sm.m.xa)];
        ++bins_b[bin(sm.m.xb)];
    }
    FilteredMatchSet stage3;
    for (const auto& sm : stage2)
        if (bins_a[bin(sm.m.xa)] == 1 && bins_b[bin(sm.m.xb)] == 1) stage3.push_back(sm);

    // stage 4: cap
    std::sort(stage3.begin(), stage3.end(), detail::score_then_canonical);
    if (stage3.size() > static_cast<std::size_t>(cfg.n_max)) stage3.resize(cfg.n_max);

    std::sort(stage3.begin(), stage3.end(),
              [](const ScoredMatch& a, const ScoredMatch& b) { return detail::canonical_less(a.m, b.m); });
    return stage3;
}

} // namespace rigsfm
