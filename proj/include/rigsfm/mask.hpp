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

#include <bit>
#include <cstdint>
#include <vector>

#include "rigsfm/errors.hpp"

namespace rigsfm {

/// Binary image-domain mask, bit-packed row-major. Unused tail bits of the
/// last word are kept zero so popcount-based area stays exact.
class MaskRaster {
  public:
    MaskRaster() = default;
    MaskRaster(int width, int height)
        : width_(width), height_(height),
          words_((static_cast<std::size_t>(width) * height + 63) / 64, 0) {
        if (width < 0 || height < 0) throw ValidationError("MaskRaster: negative dimensions");
    }

    int width() const { return width_; }
    int height() const { return height_; }
    bool empty_dims() const { return width_ == 0 || height_ == 0; }

    bool get(int x, int y) const {
        const std::size_t i = index(x, y);
        return (words_[i >> 6] >> (i & 63)) & 1u;
    }

    void set(int x, int y, bool v = true) {
        const std::size_t i = index(x, y);
        if (v)
            words_[i >> 6] |= (std::uint64_t{1} << (i & 63));
        else
            words_[i >> 6] &= ~(std::uint64_t{1} << (i & 63));
    }

    bool contains(double x, double y) const {
        const int xi = static_cast<int>(x);
        const int yi = static_cast<int>(y);
        if (x < 0.0 || y < 0.0 || xi >= width_ || yi >= height_) return false;
        return get(xi, yi);
    }

    std::int64_t area() const {
        std::int64_t n = 0;
        for (std::uint64_t w : words_) n += std::popcount(w);
        return n;
    }

    MaskRaster operator&(const MaskRaster& o) const { return binop(o, [](auto a, auto b) { return a & b; }); }
    MaskRaster operator|(const MaskRaster& o) const { return binop(o, [](auto a, auto b) { return a | b; }); }
    /// a AND NOT b
    MaskRaster and_not(const MaskRaster& o) const { return binop(o, [](auto a, auto b) { return a & ~b; }); }

    bool operator==(const MaskRaster& o) const {
        return width_ == o.width_ && height_ == o.height_ && words_ == o.words_;
    }

    void check_same_dims(const MaskRaster& o) const {
        if (width_ != o.width_ || height_ != o.height_)
            throw ValidationError("mask dimension mismatch");
    }

    MaskRaster eroded3() const { return morph(false); }
    MaskRaster dilated3() const { return morph(true); }
    MaskRaster opened3() const { return eroded3().dilated3(); }
    MaskRaster closed3() const { return dilated3().eroded3(); }

  private:
    std::size_t index(int x, int y) const {
        if (x < 0 || y < 0 || x >= width_ || y >= height_)
            throw ValidationError("MaskRaster: pixel out of range");
        return static_cast<std::size_t>(y) * width_ + x;
    }

    template <typename F>
    MaskRaster binop(const MaskRaster& o, F f) const {
        check_same_dims(o);
        MaskRaster out(width_, height_);
        for (std::size_t i = 0; i < words_.size(); ++i) out.words_[i] = f(words_[i], o.words_[i]);
        out.clear_tail();
        return out;
    }

    void clear_tail() {
        const std::size_t bits = static_cast<std::size_t>(width_) * height_;
        if (!words_.empty() && (bits & 63))
            words_.back() &= (std::uint64_t{1} << (bits & 63)) - 1;
    }

    // 3x3 full-window dilation/erosion with zero padding outside the image.
    MaskRaster morph(bool dilate) const {
        MaskRaster out(width_, height_);
        for (int y = 0; y < height_; ++y) {
            for (int x = 0; x < width_; ++x) {
                bool acc = !dilate;
                for (int dy = -1; dy <= 1 && (dilate ? !acc : acc); ++dy) {
                    for (int dx = -1; dx <= 1; ++dx) {
                        const int nx = x + dx, ny = y + dy;
                        const bool v = (nx >= 0 && ny >= 0 && nx < width_ && ny < height_)
                                           ? get(nx, ny)
                                           : false;
                        if (dilate)
                            acc = acc || v;
                        else
                            acc = acc && v;
                    }
                }
                if (acc) out.set(x, y);
            }
        }
        return out;
    }

    int width_ = 0, height_ = 0;
    std::vector<std::uint64_t> words_;
};

/// Fraction of the image domain covered by the mask.
inline double motion_energy(const MaskRaster& motion) {
    if (motion.empty_dims()) return 0.0;
    return static_cast<double>(motion.area()) /
           (static_cast<double>(motion.width()) * motion.height());
}

/// Intersection-over-union with the epsilon-padded denominator, so
/// iou(empty, empty) = 0.
inline double iou(const MaskRaster& a, const MaskRaster& b, double epsilon = 1e-6) {
    a.check_same_dims(b);
    const double inter = static_cast<double>((a & b).area());
    const double uni = static_cast<double>((a | b).area());
    return inter / (uni + epsilon);
}

/// Vehicle mask minus wheel regions: the strict rigid-body domain.
inline MaskRaster build_rigid_mask(const MaskRaster& vehicle, const MaskRaster& wheels) {
    return vehicle.and_not(wheels);
}

/// Rendering mask keeps the wheels: identity copy of the tracked vehicle mask.
inline MaskRaster build_render_mask(const MaskRaster& vehicle) { return vehicle; }

} // namespace rigsfm
