/*
 * morphfit - joint multi-scan alignment and 3D morphable face model fitting.
 *
 * File: tests/test_normals.cpp
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
#include "morphfit/normals.hpp"

#include "support/helpers.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <random>

using morphfit::estimate_normal;
using morphfit::SpatialIndex;
using morphfit::unoriented_angle;
using morphfit::Vec3;

namespace {

std::vector<Vec3> plane_patch(const Vec3& u, const Vec3& v, const Vec3& origin, int n,
                              std::mt19937_64& rng, double noise_sigma = 0.0) {
    std::uniform_real_distribution<double> coord(-1.0, 1.0);
    std::normal_distribution<double> noise(0.0, noise_sigma);
    Vec3 normal = u.cross(v).normalized();
    std::vector<Vec3> pts;
    pts.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        Vec3 p = origin + coord(rng) * u + coord(rng) * v;
        if (noise_sigma > 0.0) p += noise(rng) * normal;
        pts.push_back(p);
    }
    return pts;
}

} // namespace

TEST_CASE("points on the plane z = 5 give the exact plane normal") {
    std::mt19937_64 rng(11);
    const auto pts = plane_patch(Vec3::UnitX(), Vec3::UnitY(), Vec3(0, 0, 5), 30, rng);
    SpatialIndex index(pts);
    const auto est = estimate_normal(index, pts[0], 30);
    CHECK(est.reliable);
    CHECK(unoriented_angle(est.normal, Vec3::UnitZ()) < 1e-6);
    // Canonical sign: dominant component positive.
    CHECK(est.normal.z() > 0.0);
}

TEST_CASE("noisy diagonal plane recovers its normal within one degree") {
    std::mt19937_64 rng(12);
    const Vec3 n0 = Vec3(1, 1, 1).normalized();
    const Vec3 u = Vec3(1, -1, 0).normalized();
    const Vec3 v = n0.cross(u);
    const auto pts = plane_patch(u, v, Vec3(2, -1, 4), 200, rng, 0.01);
    SpatialIndex index(pts);
    const auto est = estimate_normal(index, pts[5], 30);
    CHECK(est.reliable);
    CHECK(morphfit::rad_to_deg(unoriented_angle(est.normal, n0)) < 1.0);
}

TEST_CASE("sphere equator point estimates the radial direction") {
    // Dense sampling of a radius-100 sphere around an equator vertex.
    std::mt19937_64 rng(13);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const double radius = 100.0;
    const Vec3 vertex(radius, 0.0, 0.0);
    std::vector<Vec3> pts;
    pts.push_back(vertex);
    while (pts.size() < 4000) {
        Vec3 dir(gauss(rng), gauss(rng), gauss(rng));
        dir.normalize();
        if ((radius * dir - vertex).norm() < 20.0) pts.push_back(radius * dir);
    }
    SpatialIndex index(pts);
    const auto est = estimate_normal(index, vertex, 30);
    CHECK(est.reliable);
    CHECK(morphfit::rad_to_deg(unoriented_angle(est.normal, Vec3::UnitX())) < 5.0);
}

TEST_CASE("collinear neighborhoods are flagged unreliable") {
    std::vector<Vec3> pts;
    for (int i = 0; i < 30; ++i) pts.emplace_back(0.1 * i, 0.0, 0.0);
    SpatialIndex index(pts);
    const auto est = estimate_normal(index, pts[0], 30);
    CHECK_FALSE(est.reliable);
}

TEST_CASE("coincident points are flagged unreliable") {
    std::vector<Vec3> pts(10, Vec3(1, 2, 3));
    SpatialIndex index(pts);
    CHECK_FALSE(estimate_normal(index, pts[0], 10).reliable);
}

TEST_CASE("plane normal is equivariant under rotation and translation") {
    std::mt19937_64 rng(14);
    for (int trial = 0; trial < 25; ++trial) {
        const auto pts = plane_patch(Vec3::UnitX(), Vec3::UnitY(), Vec3::Zero(), 40, rng);
        SpatialIndex index(pts);
        const Vec3 base = estimate_normal(index, pts[0], 40).normal;

        const auto t = helpers::random_rigid(rng, 100.0);
        std::vector<Vec3> moved = t.apply(pts);
        SpatialIndex moved_index(moved);
        const Vec3 rotated = estimate_normal(moved_index, moved[0], 40).normal;

        CHECK(unoriented_angle(rotated, t.rotation * base) < 1e-6);
    }
}

TEST_CASE("too small an index is rejected") {
    SpatialIndex index({Vec3::Zero(), Vec3::UnitX(), Vec3::UnitY()});
    CHECK_THROWS_AS(estimate_normal(index, Vec3::Zero(), 30), morphfit::InsufficientPoints);
}
