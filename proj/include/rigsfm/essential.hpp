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

#include "rigsfm/errors.hpp"
#include "rigsfm/se3.hpp"

namespace rigsfm {

/// Essential matrix on unit bearings: u_b^T E u_a = 0. Unit Frobenius norm,
/// rank 2 with equal nonzero singular values.
struct EssentialModel {
    Mat3 e = Mat3::Zero();

    EssentialModel() = default;
    explicit EssentialModel(const Mat3& m) : e(m) {
        if (std::abs(e.norm() - 1.0) > 1e-9)
            throw ValidationError("essential: matrix must have unit Frobenius norm");
        if (std::abs(e.determinant()) > 1e-9)
            throw ValidationError("essential: determinant must vanish");
        const Mat3 cubic = 2.0 * e * e.transpose() * e - (e * e.transpose()).trace() * e;
        if (cubic.norm() > 1e-6)
            throw ValidationError("essential: trace constraint violated");
    }

    static EssentialModel from_pose(const Mat3& r_b_from_a, const Vec3& t_b_from_a) {
        Mat3 m = skew(t_b_from_a) * r_b_from_a;
        m /= m.norm();
        EssentialModel out;
        out.e = m;
        out.canonicalize_sign();
        return out;
    }

    void canonicalize_sign() {
        // E and -E are the same constraint; pin the largest entry positive
        int bi = 0, bj = 0;
        double best = 0.0;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                if (std::abs(e(i, j)) > best) {
                    best = std::abs(e(i, j));
                    bi = i;
                    bj = j;
                }
        if (e(bi, bj) < 0.0) e = -e;
    }
};

/// Angular epipolar residual of a bearing pair: the sine of the angle between
/// u_b and the epipolar plane of u_a, |u_b^T E u_a| / |E u_a|.
inline double epipolar_residual(const Mat3& e, const Vec3& bearing_a, const Vec3& bearing_b) {
    const Vec3 n = e * bearing_a;
    const double denom = n.norm();
    if (denom < 1e-15) return 0.0; // bearing at the epipole satisfies any partner
    return std::abs(bearing_b.dot(n)) / denom;
}

/// Least-squares eight-point solve on bearing vectors, projected onto the
/// essential manifold (singular values (s, s, 0), s = mean of the top two).
inline EssentialModel eight_point_essential(const std::vector<Vec3>& bearings_a,
                                            const std::vector<Vec3>& bearings_b) {
    const std::size_t n = bearings_a.size();
    if (n < 8 || bearings_b.size() != n)
        throw ValidationError("eight_point: need >= 8 bearing pairs");

    Eigen::MatrixXd a(n, 9);
    for (std::size_t i = 0; i < n; ++i) {
        const Vec3& ua = bearings_a[i];
        const Vec3& ub = bearings_b[i];
        // coefficient of E(r, c) is ub[r] * ua[c], E flattened row-major
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) a(i, 3 * r + c) = ub[r] * ua[c];
    }

    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    if (sv[7] < 1e-12 * sv[0])
        throw NumericalError("eight_point: degenerate configuration (rank-deficient system)");
    const Eigen::Matrix<double, 9, 1> evec = svd.matrixV().col(8);
    Mat3 e0;
    e0 << evec[0], evec[1], evec[2], evec[3], evec[4], evec[5], evec[6], evec[7], evec[8];

    const Eigen::JacobiSVD<Mat3> esvd(e0, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const double s = 0.5 * (esvd.singularValues()[0] + esvd.singularValues()[1]);
    Vec3 d(s, s, 0.0);
    Mat3 e = esvd.matrixU() * d.asDiagonal() * esvd.matrixV().transpose();
    e /= e.norm();

    EssentialModel out;
    out.e = e;
    out.canonicalize_sign();
    return out;
}

/// The four (R, t) factorizations of an essential matrix.
inline std::array<std::pair<Mat3, Vec3>, 4> decompose_essential(const Mat3& e) {
    const Eigen::JacobiSVD<Mat3> svd(e, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Mat3 u = svd.matrixU();
    Mat3 v = svd.matrixV();
    if (u.determinant() < 0) u.col(2) *= -1.0;
    if (v.determinant() < 0) v.col(2) *= -1.0;
    Mat3 w;
    w << 0, -1, 0, 1, 0, 0, 0, 0, 1;
    const Mat3 r1 = u * w * v.transpose();
    const Mat3 r2 = u * w.transpose() * v.transpose();
    const Vec3 t = u.col(2);
    return {std::pair(r1, t), std::pair(r1, Vec3(-t)), std::pair(r2, t), std::pair(r2, Vec3(-t))};
}

/// Two-ray midpoint depth signs for cheirality checks: returns the depths of
/// the point along each bearing under x_b = R x_a + t.
inline std::pair<double, double> two_view_depths(const Mat3& r, const Vec3& t, const Vec3& ua,
                                                 const Vec3& ub) {
    // solve [ R ua, -ub ] [da, db]^T = -t in least squares
    Eigen::Matrix<double, 3, 2> m;
    m.col(0) = r * ua;
    m.col(1) = -ub;
    const Eigen::Vector2d d = m.colPivHouseholderQr().solve(-t);
    return {d[0], d[1]};
}

} // namespace rigsfm
