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

#include <string>
#include <vector>

#include "rigsfm/camera.hpp"
#include "rigsfm/errors.hpp"
#include "rigsfm/se3.hpp"

namespace rigsfm {

struct RigCamera {
    std::string id;
    FisheyeIntrinsics intrinsics;
    RigidPose prior; // rig_from_camera, measured offline
};

/// Static multi-camera rig: ordered cameras, per-camera pose priors relative
/// to the reference camera (whose prior is the identity), and the shared-FOV
/// adjacency matrix driving pair selection.
struct RigConfig {
    std::vector<RigCamera> cameras;
    std::string reference_camera;
    std::vector<std::vector<int>> adjacency; // C x C, {0,1}

    void validate() const {
        const std::size_t c = cameras.size();
        if (c == 0) throw ValidationError("rig: no cameras");
        int ref = -1;
        for (std::size_t i = 0; i < c; ++i) {
            for (std::size_t j = i + 1; j < c; ++j)
                if (cameras[i].id == cameras[j].id)
                    throw ValidationError("rig: duplicate camera id " + cameras[i].id);
            if (cameras[i].id == reference_camera) ref = static_cast<int>(i);
        }
        if (ref < 0) throw ValidationError("rig: reference camera not found: " + reference_camera);
        const RigidPose& p = cameras[ref].prior;
        if ((p.rotation - Mat3::Identity()).norm() > 1e-9 || p.translation.norm() > 1e-9)
            throw ValidationError("rig: reference camera prior must be identity");
        if (adjacency.size() != c) throw ValidationError("rig: adjacency size mismatch");
        for (std::size_t i = 0; i < c; ++i) {
            if (adjacency[i].size() != c) throw ValidationError("rig: adjacency row size mismatch");
            if (adjacency[i][i] != 0) throw ValidationError("rig: adjacency diagonal must be zero");
            for (std::size_t j = 0; j < c; ++j) {
                if (adjacency[i][j] != 0 && adjacency[i][j] != 1)
                    throw ValidationError("rig: adjacency entries must be 0/1");
                if (adjacency[i][j] != adjacency[j][i])
                    throw ValidationError("rig: adjacency must be symmetric");
            }
        }
        if (!adjacency_connected())
            throw ValidationError("rig: adjacency graph must be connected");
    }

    bool adjacency_connected() const {
        const std::size_t c = cameras.size();
        std::vector<char> seen(c, 0);
        std::vector<std::size_t> stack{0};
        seen[0] = 1;
        std::size_t count = 1;
        while (!stack.empty()) {
            const std::size_t i = stack.back();
            stack.pop_back();
            for (std::size_t j = 0; j < c; ++j) {
                if (adjacency[i][j] && !seen[j]) {
                    seen[j] = 1;
                    ++count;
                    stack.push_back(j);
                }
            }
        }
        return count == c;
    }

    int index_of(const std::string& id) const {
        for (std::size_t i = 0; i < cameras.size(); ++i)
            if (cameras[i].id == id) return static_cast<int>(i);
        throw ValidationError("rig: unknown camera id " + id);
    }

    int reference_index() const { return index_of(reference_camera); }
};

} // namespace rigsfm
