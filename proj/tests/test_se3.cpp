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

#include <catch_amalgamated.hpp>

#include "rigsfm/rng.hpp"
#include "rigsfm/se3.hpp"

using namespace rigsfm;

namespace {

Twist random_twist(Rng& rng, double rho_scale, double phi_max) {
    Vec3 rho(rng.normal(), rng.normal(), rng.normal());
    Vec3 axis(rng.normal(), rng.normal(), rng.normal());
    axis.normalize();
    const double angle = rng.uniform(0.0, phi_max);
    return Twist(rho_scale * rho, angle * axis);
}

} // namespace

TEST_CASE("se3_exp of zero twist is identity") {
    const RigidPose p = se3_exp(Twist{});
    CHECK((p.rotation - Mat3::Identity()).norm() < 1e-15);
    CHECK(p.translation.norm() < 1e-15);
}

TEST_CASE("pure z rotation of pi/2") {
    const RigidPose p = se3_exp(Twist(Vec3::Zero(), Vec3(0, 0, M_PI / 2)));
    Mat3 expected;
    expected << 0, -1, 0, 1, 0, 0, 0, 0, 1;
    CHECK((p.rotation - expected).norm() < 1e-12);
    CHECK(p.translation.norm() < 1e-15);
}

TEST_CASE("log(exp(xi)) roundtrip over random twists") {
    Rng rng(42);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const Twist xi = random_twist(rng, 1.0, 3.0);
        const Twist back = se3_log(se3_exp(xi));
        worst = std::max(worst, (back.vector() - xi.vector()).norm());
    }
    CHECK(worst < 1e-9);
}

TEST_CASE("exp(xi) * exp(-xi) is identity") {
    Rng rng(7);
    for (int i = 0; i < 200; ++i) {
        const Twist xi = random_twist(rng, 2.0, 3.0);
        const Twist neg(-xi.rho, -xi.phi);
        const RigidPose p = se3_exp(xi) * se3_exp(neg);
        CHECK((p.rotation - Mat3::Identity()).norm() < 1e-9);
        CHECK(p.translation.norm() < 1e-9);
    }
}

TEST_CASE("log at angle pi is a domain error") {
    const Mat3 r = so3_exp(Vec3(0, 0, M_PI));
    CHECK_THROWS_AS(so3_log(r), ValidationError);
}

TEST_CASE("pose invariants enforced at construction") {
    Mat3 bad = Mat3::Identity();
    bad(0, 0) = 1.1;
    CHECK_THROWS_AS(RigidPose(bad, Vec3::Zero()), ValidationError);
    Mat3 reflect = Mat3::Identity();
    reflect(2, 2) = -1.0; // det -1
    CHECK_THROWS_AS(RigidPose(reflect, Vec3::Zero()), ValidationError);
}

TEST_CASE("rig_absolute_pose composition") {
    SECTION("identity cases") {
        const RigidPose id;
        const RigidPose local = se3_exp(Twist(Vec3(0.1, -0.2, 0.3), Vec3(0.2, 0.1, -0.4)));
        CHECK((rig_absolute_pose(id, id).matrix() - Eigen::Matrix4d::Identity()).norm() < 1e-15);
        CHECK((rig_absolute_pose(id, local).matrix() - local.matrix()).norm() < 1e-15);
    }
    SECTION("matches homogeneous 4x4 product") {
        Rng rng(11);
        for (int i = 0; i < 100; ++i) {
            const RigidPose a = se3_exp(random_twist(rng, 1.5, 3.0));
            const RigidPose b = se3_exp(random_twist(rng, 1.5, 3.0));
            const Eigen::Matrix4d oracle = a.matrix() * b.matrix();
            CHECK((rig_absolute_pose(a, b).matrix() - oracle).norm() < 1e-12);
        }
    }
    SECTION("associative with further composition") {
        Rng rng(13);
        const RigidPose a = se3_exp(random_twist(rng, 1.0, 2.5));
        const RigidPose b = se3_exp(random_twist(rng, 1.0, 2.5));
        const RigidPose c = se3_exp(random_twist(rng, 1.0, 2.5));
        const Eigen::Matrix4d lhs = ((a * b) * c).matrix();
        const Eigen::Matrix4d rhs = (a * (b * c)).matrix();
        CHECK((lhs - rhs).norm() < 1e-12);
    }
}

TEST_CASE("rotation stays orthonormal over long composition chains") {
    Rng rng(3);
    RigidPose p;
    for (int i = 0; i < 5000; ++i) p = p * se3_exp(random_twist(rng, 0.01, 0.05));
    CHECK((p.rotation.transpose() * p.rotation - Mat3::Identity()).norm() < 1e-9);
    CHECK(std::abs(p.rotation.determinant() - 1.0) < 1e-9);
}

TEST_CASE("se3 inverse left Jacobian matches finite differences") {
    Rng rng(97);
    const double h = 1e-6;
    for (int trial = 0; trial < 50; ++trial) {
        const Twist xi = random_twist(rng, 1.0, 2.5);
        const RigidPose base = se3_exp(xi);
        const Mat6 analytic = se3_left_jacobian_inverse(xi);
        Mat6 fd;
        for (int c = 0; c < 6; ++c) {
            Vec6 d = Vec6::Zero();
            d[c] = h;
            const Vec6 plus = se3_log(se3_exp(Twist(d)) * base).vector();
            const Vec6 minus = se3_log(se3_exp(Twist(Vec6(-d))) * base).vector();
            fd.col(c) = (plus - minus) / (2.0 * h);
        }
        CHECK((analytic - fd).norm() / fd.norm() < 1e-5);
    }
}
