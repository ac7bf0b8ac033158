/*
 * morphfit - joint multi-scan alignment and 3D morphable face model fitting.
 *
 * File: tests/test_spatial_index.cpp
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
#include "morphfit/spatial_index.hpp"

#include "support/helpers.hpp"
#include "support/oracles.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <random>

using morphfit::SpatialIndex;
using morphfit::Vec3;

TEST_CASE("singleton index returns its only point") {
    SpatialIndex index({Vec3(1.0, 2.0, 3.0)});
    CHECK(index.k_nearest(Vec3(100.0, -50.0, 0.0), 1) == std::vector<int>{0});
    CHECK(index.k_nearest(Vec3::Zero(), 1) == std::vector<int>{0});
}

TEST_CASE("empty input is rejected") {
    CHECK_THROWS_AS(SpatialIndex(std::vector<Vec3>{}), morphfit::EmptyCloud);
}

TEST_CASE("k beyond point count is rejected") {
    SpatialIndex index({Vec3::Zero(), Vec3::Ones()});
    CHECK_THROWS_AS(index.k_nearest(Vec3::Zero(), 3), morphfit::InsufficientPoints);
    CHECK_THROWS_AS(index.k_nearest(Vec3::Zero(), 0), morphfit::InvalidArgument);
}

TEST_CASE("cube corners from the center: k=8 returns all corners") {
    std::vector<Vec3> corners;
    for (int x : {0, 1})
        for (int y : {0, 1})
            for (int z : {0, 1}) corners.emplace_back(x, y, z);
    SpatialIndex index(corners);
    const auto nn = index.k_nearest(Vec3(0.5, 0.5, 0.5), 8);
    // All tie on distance, so ordering falls back to index order.
    CHECK(nn == std::vector<int>{0, 1, 2, 3, 4, 5, 6, 7});
}

TEST_CASE("collinear example resolves by hand-computed distances") {
    // Points on the x axis at 0, 1, 2, 4; query x = 2.4: nearest are x=2 (0.4)
    // and x=1 (1.4), with x=4 at 1.6.
    SpatialIndex index({Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(2, 0, 0), Vec3(4, 0, 0)});
    CHECK(index.k_nearest(Vec3(2.4, 0.0, 0.0), 2) == std::vector<int>{2, 1});
}

TEST_CASE("k equal to point count returns every index") {
    std::mt19937_64 rng(7);
    const auto pts = helpers::random_points(40, 10.0, rng);
    SpatialIndex index(pts);
    auto nn = index.k_nearest(Vec3(0.3, -0.4, 0.1), 40);
    std::sort(nn.begin(), nn.end());
    for (int i = 0; i < 40; ++i) CHECK(nn[static_cast<std::size_t>(i)] == i);
}

TEST_CASE("k-nearest matches the linear-scan oracle on random instances") {
    std::mt19937_64 rng(20260810);
    for (int trial = 0; trial < 220; ++trial) {
        const int n = 1 + static_cast<int>(rng() % 500);
        const auto pts = helpers::random_points(n, 20.0, rng);
        SpatialIndex index(pts);
        const Vec3 query = helpers::random_points(1, 25.0, rng)[0];
        const int k = 1 + static_cast<int>(rng() % static_cast<unsigned>(n));
        REQUIRE(index.k_nearest(query, k) == oracles::brute_knn(pts, query, k));
    }
}

TEST_CASE("1000 random points, k=30 equals oracle") {
    std::mt19937_64 rng(99);
    const auto pts = helpers::random_points(1000, 100.0, rng);
    SpatialIndex index(pts);
    const Vec3 query(3.0, -8.0, 12.0);
    REQUIRE(index.k_nearest(query, 30) == oracles::brute_knn(pts, query, 30));
}

TEST_CASE("ties on a grid are broken by lowest index everywhere") {
    // Integer grid gives many exactly equal distances.
    std::vector<Vec3> pts;
    for (int x = 0; x < 5; ++x)
        for (int y = 0; y < 5; ++y)
            for (int z = 0; z < 3; ++z) pts.emplace_back(x, y, z);
    SpatialIndex index(pts);
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        const Vec3 q(static_cast<double>(rng() % 5), static_cast<double>(rng() % 5),
                     static_cast<double>(rng() % 3));
        const int k = 1 + static_cast<int>(rng() % pts.size());
        REQUIRE(index.k_nearest(q, k) == oracles::brute_knn(pts, q, k));
    }
}

TEST_CASE("radius query matches the linear scan") {
    std::mt19937_64 rng(31337);
    for (int trial = 0; trial < 100; ++trial) {
        const int n = 2 + static_cast<int>(rng() % 300);
        const auto pts = helpers::random_points(n, 10.0, rng);
        SpatialIndex index(pts);
        const Vec3 query = helpers::random_points(1, 10.0, rng)[0];
        std::uniform_real_distribution<double> rdist(0.0, 8.0);
        const double r = rdist(rng);
        REQUIRE(index.radius_indices(query, r) == oracles::brute_radius(pts, query, r));
    }
}
