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

#include <cstdint>
#include <map>
#include <set>
#include <vector>

#include "rigsfm/errors.hpp"
#include "rigsfm/se3.hpp"

namespace rigsfm {

/// Frame key used inside the SfM stage: camera index into the rig plus frame
/// index. String camera ids live at the io boundary.
struct FrameKey {
    int cam = 0;
    int t = 0;
    auto operator<=>(const FrameKey&) const = default;
};

struct TrackObservation {
    FrameKey frame;
    Vec2 pixel = Vec2::Zero();
};

struct Track {
    std::vector<TrackObservation> observations; // sorted by frame, one per frame
    std::vector<std::int64_t> match_ids;        // provenance tags of merged matches
};

/// One verified correspondence between two frames, input to track building.
struct PairCorrespondence {
    FrameKey frame_a, frame_b;
    Vec2 xa = Vec2::Zero();
    Vec2 xb = Vec2::Zero();
    std::int64_t id = -1;
};

namespace detail {

class UnionFind {
  public:
    explicit UnionFind(std::size_t n) : parent_(n) {
        for (std::size_t i = 0; i < n; ++i) parent_[i] = i;
    }
    std::size_t find(std::size_t x) {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];
            x = parent_[x];
        }
        return x;
    }
    void unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a != b) parent_[std::max(a, b)] = std::min(a, b);
    }

  private:
    std::vector<std::size_t> parent_;
};

} // namespace detail

/// Transitive closure of verified correspondences via union-find over
/// quantized keypoints. Components with two distinct keypoints in one frame
/// are inconsistent and dropped, as are components with fewer than two
/// observations.
inline std::vector<Track> build_tracks(const std::vector<PairCorrespondence>& correspondences,
                                       double merge_quantum = 1.0) {
    if (!(merge_quantum > 0.0)) throw ValidationError("build_tracks: merge_quantum must be positive");

    struct NodeKey {
        FrameKey frame;
        std::int64_t bx, by;
        auto operator<=>(const NodeKey&) const = default;
    };
    auto key_of = [&](const FrameKey& f, const Vec2& px) {
        return NodeKey{f, static_cast<std::int64_t>(std::floor(px.x() / merge_quantum)),
                       static_cast<std::int64_t>(std::floor(px.y() / merge_quantum))};
    };

    std::map<NodeKey, std::size_t> node_index;
    std::vector<TrackObservation> node_obs; // first-seen pixel per node
    auto node_of = [&](const FrameKey& f, const Vec2& px) {
        const NodeKey k = key_of(f, px);
        auto [it, inserted] = node_index.emplace(k, node_obs.size());
        if (inserted) node_obs.push_back({f, px});
        return it->second;
    };

    std::vector<std::pair<std::size_t, std::size_t>> links;
    std::vector<std::int64_t> link_ids;
    links.reserve(correspondences.size());
    for (const auto& c : correspondences) {
        links.emplace_back(node_of(c.frame_a, c.xa), node_of(c.frame_b, c.xb));
        link_ids.push_back(c.id);
    }

    detail::UnionFind uf(node_obs.size());
    for (const auto& [a, b] : links) uf.unite(a, b);

    std::map<std::size_t, Track> groups;
    std::map<std::size_t, std::set<int>> frames_seen; // root -> frame multiplicity check
    std::map<std::size_t, bool> conflicted;
    for (std::size_t i = 0; i < node_obs.size(); ++i) {
        const std::size_t root = uf.find(i);
        auto& track = groups[root];
        track.observations.push_back(node_obs[i]);
        const int fkey = node_obs[i].frame.cam * 1000003 + node_obs[i].frame.t;
        if (!frames_seen[root].insert(fkey).second) conflicted[root] = true;
    }
    for (std::size_t i = 0; i < links.size(); ++i) {
        if (link_ids[i] < 0) continue;
        groups[uf.find(links[i].first)].match_ids.push_back(link_ids[i]);
    }

    std::vector<Track> tracks;
    for (auto& [root, track] : groups) {
        if (conflicted.count(root) || track.observations.size() < 2) continue;
        std::sort(track.observations.begin(), track.observations.end(),
                  [](const TrackObservation& a, const TrackObservation& b) {
                      return std::tuple(a.frame.cam, a.frame.t, a.pixel.x(), a.pixel.y()) <
                             std::tuple(b.frame.cam, b.frame.t, b.pixel.x(), b.pixel.y());
                  });
        std::sort(track.match_ids.begin(), track.match_ids.end());
        tracks.push_back(std::move(track));
    }
    return tracks;
}

} // namespace rigsfm
