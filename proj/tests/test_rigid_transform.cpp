/*
 * morphfit - joint multi-scan alignment and 3D morphable face model fitting.
 *
 * File: tests/test_rigid_transform.cpp
 *
 * Copyright 2026 The morphfit authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#include "morphfit/rigid_transform.hpp"

#include "support/helpers.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <random>

using morphfit::optimal_rigid_transform;
using morphfit::RigidTransform;
using morphfit::Vec3;

TEST_CASE("identical point sets give the identity transform") {
    std::mt19937_64 rng(1);
    const auto pts = helpers::random_points(20, 30.0, rng);
    const RigidTransform t = optimal_rigid_transform(pts, pts);
    CHECK((t.rotation - Eigen::Matrix3d::Identity()).norm() < 1e-12);
    CHECK(t.translation.norm() < 1e-12);
}

TEST_CASE("exact round trip recovers the generating transform") {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 20; ++trial) {
        const auto src = helpers::random_points(10, 40.0, rng);
        const RigidTransform truth = helpers::random_rigid(rng);
        const auto dst = truth.apply(src);
        const RigidTransform recovered = optimal_rigid_transform(src, dst);
        CHECK((recovered.rotation - truth.rotation).cwiseAbs().maxCoeff() < 1e-9);
        CHECK((recovered.translation - truth.translation).norm() < 1e-9);
    }
}

TEST_CASE("noisy correspondences stay within twice the noise level") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> noise(0.0, 0.1);
    const auto src = helpers::random_points(100, 50.0, rng);
    const RigidTransform truth = helpers::random_rigid(rng);
    std::vector<Vec3> dst = truth.apply(src);
    for (Vec3& p : dst) p += Vec3(noise(rng), noise(rng), noise(rng));

    const RigidTransform recovered = optimal_rigid_transform(src, dst);
    double sq_sum = 0.0;
    for (std::size_t i = 0; i < src.size(); ++i)
        sq_sum += (recovered.apply(src[i]) - dst[i]).squaredNorm();
    const double rms = std::sqrt(sq_sum / static_cast<double>(src.size()));
    // Noise is 3D with sigma = 0.1 per axis; the bound is generous.
    CHECK(rms <= 2.0 * 0.1 * std::sqrt(3.0));
}

TEST_CASE("recovered transform never increases the error versus identity") {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> noise(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        const auto src = helpers::random_points(30, 20.0, rng);
        std::vector<Vec3> dst = src;
        for (Vec3& p : dst) p += Vec3(noise(rng), noise(rng), noise(rng));
        const RigidTransform t = optimal_rigid_transform(src, dst);
        double before = 0.0, after = 0.0;
        for (std::size_t i = 0; i < src.size(); ++i) {
            before += (src[i] - dst[i]).squaredNorm();
            after += (t.apply(src[i]) - dst[i]).squaredNorm();
        }
        CHECK(after <= before + 1e-9);
    }
}

TEST_CASE("collinear and coincident sources are rejected") {
    std::vector<Vec3> line = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(2, 0, 0), Vec3(5, 0, 0)};
    CHECK_THROWS_AS(optimal_rigid_transform(line, line), morphfit::DegenerateCorrespondence);

    std::vector<Vec3> same(4, Vec3(1, 2, 3));
    CHECK_THROWS_AS(optimal_rigid_transform(same, same), morphfit::DegenerateCorrespondence);

    std::vector<Vec3> two = {Vec3(0, 0, 0), Vec3(1, 0, 0)};
    CHECK_THROWS_AS(optimal_rigid_transform(two, two), morphfit::DegenerateCorrespondence);
}

TEST_CASE("reflections are never produced") {
    // A mirrored destination tempts the unconstrained solution toward det = -1.
    std::vector<Vec3> src = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(0, 0, 1)};
    std::vector<Vec3> dst = src;
    for (Vec3& p : dst) p.z() = -p.z();
    const RigidTransform t = optimal_rigid_transform(src, dst);
    CHECK(t.rotation.determinant() == Catch::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("composition stays orthonormal over ten thousand steps") {
    std::mt19937_64 rng(5);
    RigidTransform acc;
    for (int i = 0; i < 10000; ++i) acc = helpers::random_rigid(rng, 1.0) * acc;
    CHECK(acc.orthonormality_error() < 1e-6);
    // Re-orthonormalization is available if drift ever exceeds the budget.
    CHECK(acc.orthonormalized().orthonormality_error() < 1e-12);
}

TEST_CASE("inverse composes to the identity") {
    std::mt19937_64 rng(6);
    const RigidTransform t = helpers::random_rigid(rng);
    const RigidTransform id = t * t.inverse();
    CHECK((id.rotation - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(id.translation.norm() < 1e-12);
}

TEST_CASE("homogeneous matrix round trip") {
    std::mt19937_64 rng(7);
    const RigidTransform t = helpers::random_rigid(rng);
    const RigidTransform back = RigidTransform::from_homogeneous(t.homogeneous());
    CHECK((back.rotation - t.rotation).cwiseAbs().maxCoeff() == 0.0);
    CHECK((back.translation - t.translation).norm() == 0.0);
}
