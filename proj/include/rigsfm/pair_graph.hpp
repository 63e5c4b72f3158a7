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
#include <compare>
#include <map>
#include <string>
#include <vector>

#include "rigsfm/errors.hpp"

namespace rigsfm {

struct FrameId {
    std::string cam;
    int t = 0;

    auto operator<=>(const FrameId&) const = default;
};

enum class EdgeKind { Spatial, Temporal, Both };

inline const char* edge_kind_name(EdgeKind k) {
    switch (k) {
        case EdgeKind::Spatial: return "spatial";
        case EdgeKind::Temporal: return "temporal";
        default: return "both";
    }
}

struct PairEdge {
    FrameId a, b; // canonical: a < b lexicographically on (cam, t)
    EdgeKind kind = EdgeKind::Spatial;

    static PairEdge make(FrameId x, FrameId y, EdgeKind k) {
        if (y < x) std::swap(x, y);
        return {std::move(x), std::move(y), k};
    }
    auto key() const { return std::pair(a, b); }
};

struct PairGraphConfig {
    int max_cross_offset = 1;  // K: cross-camera temporal offset
    int temporal_window = 3;   // tau: same-camera sliding window

    void validate() const {
        if (max_cross_offset < 0) throw ValidationError("pair graph: K must be >= 0");
        if (temporal_window < 1) throw ValidationError("pair graph: tau must be >= 1");
    }
};

struct PairGraph {
    std::vector<FrameId> vertices;
    std::vector<PairEdge> edges; // canonically ordered, deduplicated
    bool adjacency_connected = true;
    std::size_t edge_bound = 0; // |V| tau + |V| d_max (2K+1)
};

namespace detail {

inline void check_adjacency(const std::vector<std::vector<int>>& adjacency) {
    for (std::size_t i = 0; i < adjacency.size(); ++i) {
        if (adjacency[i].size() != adjacency.size())
            throw ValidationError("pair graph: adjacency must be square");
        if (adjacency[i][i] != 0) throw ValidationError("pair graph: adjacency diagonal must be zero");
        for (std::size_t j = 0; j < adjacency.size(); ++j)
            if (adjacency[i][j] != adjacency[j][i])
                throw ValidationError("pair graph: adjacency must be symmetric");
    }
}

} // namespace detail

/// Cross-camera edges: (I_{k,t}, I_{j,t+delta}) for adjacent cameras and
/// |delta| <= K, restricted to frames that exist.
inline std::vector<PairEdge> build_spatial_edges(const std::vector<FrameId>& vertices,
                                                 const std::vector<std::string>& camera_order,
                                                 const std::vector<std::vector<int>>& adjacency,
                                                 int max_cross_offset) {
    detail::check_adjacency(adjacency);
    std::map<std::string, std::vector<int>> frames_by_cam;
    for (const auto& v : vertices) frames_by_cam[v.cam].push_back(v.t);
    for (auto& [cam, ts] : frames_by_cam) std::sort(ts.begin(), ts.end());

    std::map<std::pair<FrameId, FrameId>, EdgeKind> out;
    for (std::size_t k = 0; k < camera_order.size(); ++k) {
        for (std::size_t j = k + 1; j < camera_order.size(); ++j) {
            if (!adjacency[k][j]) continue;
            const auto itk = frames_by_cam.find(camera_order[k]);
            const auto itj = frames_by_cam.find(camera_order[j]);
            if (itk == frames_by_cam.end() || itj == frames_by_cam.end()) continue;
            for (int tk : itk->second) {
                for (int d = -max_cross_offset; d <= max_cross_offset; ++d) {
                    const int tj = tk + d;
                    if (!std::binary_search(itj->second.begin(), itj->second.end(), tj)) continue;
                    const PairEdge e = PairEdge::make({camera_order[k], tk}, {camera_order[j], tj},
                                                      EdgeKind::Spatial);
                    out.emplace(e.key(), e.kind);
                }
            }
        }
    }
    std::vector<PairEdge> edges;
    edges.reserve(out.size());
    for (const auto& [key, kind] : out) edges.push_back({key.first, key.second, kind});
    return edges;
}

/// Same-camera edges with 1 <= |t1 - t2| <= tau.
inline std::vector<PairEdge> build_temporal_edges(const std::vector<FrameId>& vertices,
                                                  int temporal_window) {
    if (temporal_window < 1) throw ValidationError("pair graph: tau must be >= 1");
    std::map<std::string, std::vector<int>> frames_by_cam;
    for (const auto& v : vertices) frames_by_cam[v.cam].push_back(v.t);

    std::map<std::pair<FrameId, FrameId>, EdgeKind> out;
    for (auto& [cam, ts] : frames_by_cam) {
        std::sort(ts.begin(), ts.end());
        for (std::size_t i = 0; i < ts.size(); ++i) {
            for (std::size_t j = i + 1; j < ts.size(); ++j) {
                if (ts[j] - ts[i] > temporal_window) break;
                if (ts[j] == ts[i]) continue;
                const PairEdge e = PairEdge::make({cam, ts[i]}, {cam, ts[j]}, EdgeKind::Temporal);
                out.emplace(e.key(), e.kind);
            }
        }
    }
    std::vector<PairEdge> edges;
    edges.reserve(out.size());
    for (const auto& [key, kind] : out) edges.push_back({key.first, key.second, kind});
    return edges;
}

/// Union of spatial and temporal edges with the degree bound report.
inline PairGraph build_pair_graph(const std::vector<FrameId>& vertices,
                                  const std::vector<std::string>& camera_order,
                                  const std::vector<std::vector<int>>& adjacency,
                                  const PairGraphConfig& cfg) {
    cfg.validate();
    PairGraph g;
    g.vertices = vertices;
    std::sort(g.vertices.begin(), g.vertices.end());

    std::map<std::pair<FrameId, FrameId>, EdgeKind> merged;
    for (const auto& e : build_spatial_edges(vertices, camera_order, adjacency, cfg.max_cross_offset))
        merged.emplace(e.key(), EdgeKind::Spatial);
    for (const auto& e : build_temporal_edges(vertices, cfg.temporal_window)) {
        auto [it, inserted] = merged.emplace(e.key(), EdgeKind::Temporal);
        if (!inserted && it->second != EdgeKind::Temporal) it->second = EdgeKind::Both;
    }
    g.edges.reserve(merged.size());
    for (const auto& [key, kind] : merged) g.edges.push_back({key.first, key.second, kind});

    // connectivity of the camera adjacency graph (required downstream)
    const std::size_t c = camera_order.size();
    if (c > 0) {
        std::vector<char> seen(c, 0);
        std::vector<std::size_t> stack{0};
        seen[0] = 1;
        std::size_t count = 1;
        while (!stack.empty()) {
            const std::size_t i = stack.back();
            stack.pop_back();
            for (std::size_t j = 0; j < c; ++j)
                if (adjacency[i][j] && !seen[j]) {
                    seen[j] = 1;
                    ++count;
                    stack.push_back(j);
                }
        }
        g.adjacency_connected = (count == c);
    }

    std::size_t d_max = 0;
    for (std::size_t i = 0; i < c; ++i) {
        std::size_t d = 0;
        for (std::size_t j = 0; j < c; ++j) d += adjacency[i][j] ? 1 : 0;
        d_max = std::max(d_max, d);
    }
    g.edge_bound = g.vertices.size() * static_cast<std::size_t>(cfg.temporal_window) +
                   g.vertices.size() * d_max * (2 * static_cast<std::size_t>(cfg.max_cross_offset) + 1);
    if (g.edges.size() > g.edge_bound)
        throw NumericalError("pair graph: edge count exceeds the degree bound");
    return g;
}

} // namespace rigsfm
