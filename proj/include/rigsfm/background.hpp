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
#include <vector>

#include "rigsfm/errors.hpp"
#include "rigsfm/mask.hpp"

namespace rigsfm {

/// Per-pixel running mean/variance background model. A pixel is foreground
/// when it deviates from the mean by more than max(k_sigma * sigma,
/// sigma_floor); the raw mask then gets a 3x3 morphological open and close.
/// The update is selective: foreground pixels do not feed the model, so a
/// slow-moving object cannot absorb itself into the background.
class RunningBackground {
  public:
    RunningBackground(int width, int height, double alpha = 0.05, double k_sigma = 3.0,
                      double sigma_floor = 5.0)
        : width_(width), height_(height), alpha_(alpha), k_sigma_(k_sigma),
          sigma_floor_(sigma_floor), mean_(static_cast<std::size_t>(width) * height, 0.0),
          var_(static_cast<std::size_t>(width) * height, 0.0) {}

    int width() const { return width_; }
    int height() const { return height_; }
    bool initialized() const { return initialized_; }

    /// Classify the frame against the running model, then fold it in.
    /// The first frame initializes the model and yields an empty mask.
    MaskRaster motion_mask(const std::vector<std::uint8_t>& frame) {
        if (frame.size() != mean_.size())
            throw ValidationError("motion_mask: frame dimensions do not match model");
        MaskRaster raw(width_, height_);
        if (!initialized_) {
            for (std::size_t i = 0; i < frame.size(); ++i) mean_[i] = frame[i];
            initialized_ = true;
            return raw;
        }
        for (int y = 0; y < height_; ++y) {
            for (int x = 0; x < width_; ++x) {
                const std::size_t i = static_cast<std::size_t>(y) * width_ + x;
                const double diff = frame[i] - mean_[i];
                const double thr = std::max(k_sigma_ * std::sqrt(var_[i]), sigma_floor_);
                if (std::abs(diff) > thr) {
                    raw.set(x, y);
                } else {
                    mean_[i] += alpha_ * diff;
                    var_[i] = (1.0 - alpha_) * (var_[i] + alpha_ * diff * diff);
                }
            }
        }
        return raw.opened3().closed3();
    }

  private:
    int width_, height_;
    double alpha_, k_sigma_, sigma_floor_;
    std::vector<double> mean_, var_;
    bool initialized_ = false;
};

} // namespace rigsfm
