/*
 * morphfit - joint multi-scan alignment and 3D morphable face model fitting.
 *
 * File: tests/test_triangle_mesh.cpp
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
#include "morphfit/triangle_mesh.hpp"

#include "support/helpers.hpp"
#include "support/oracles.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <random>

using morphfit::closest_point_on_mesh;
using morphfit::closest_point_on_triangle;
using morphfit::MeshDistanceIndex;
using morphfit::SurfacePoint;
using morphfit::TriangleMesh;
using morphfit::Vec3;

TEST_CASE("query coincident with a mesh vertex returns it at distance zero") {
    std::mt19937_64 rng(21);
    const TriangleMesh mesh = helpers::random_mesh(30, 40, 10.0, rng);
    const Vec3 target = mesh.vertices[7];
    // Only meaningful if vertex 7 is used by some face.
    bool used = false;
    for (const auto& f : mesh.faces) used = used || f[0] == 7 || f[1] == 7 || f[2] == 7;
    if (!used) return;
    const SurfacePoint sp = closest_point_on_mesh(mesh, target);
    CHECK((sp.position - target).norm() < 1e-12);
}

TEST_CASE("point above a single triangle projects orthogonally onto its plane") {
    TriangleMesh mesh;
    mesh.vertices = {Vec3(0, 0, 0), Vec3(6, 0, 0), Vec3(0, 6, 0)};
    mesh.faces = {{0, 1, 2}};
    const Vec3 centroid(2, 2, 0);
    const SurfacePoint sp = closest_point_on_mesh(mesh, centroid + Vec3(0, 0, 3.5));
    CHECK((sp.position - centroid).norm() < 1e-12);
    CHECK(sp.face_index == 0);
    CHECK(sp.barycentric.minCoeff() >= 0.0);
    CHECK(sp.barycentric.sum() == Catch::Approx(1.0).margin(1e-9));
}

TEST_CASE("barycentric output reproduces the surface position") {
    std::mt19937_64 rng(22);
    const TriangleMesh mesh = helpers::random_mesh(40, 60, 15.0, rng);
    for (int trial = 0; trial < 200; ++trial) {
        const Vec3 q = helpers::random_points(1, 25.0, rng)[0];
        const SurfacePoint sp = closest_point_on_mesh(mesh, q);
        const auto& f = mesh.faces[static_cast<std::size_t>(sp.face_index)];
        const Vec3 combo = sp.barycentric[0] * mesh.vertices[static_cast<std::size_t>(f[0])] +
                           sp.barycentric[1] * mesh.vertices[static_cast<std::size_t>(f[1])] +
                           sp.barycentric[2] * mesh.vertices[static_cast<std::size_t>(f[2])];
        CHECK(sp.barycentric.minCoeff() >= 0.0);
        CHECK(std::abs(sp.barycentric.sum() - 1.0) < 1e-9);
        CHECK((combo - sp.position).norm() < 1e-9);
    }
}

TEST_CASE("closest point equals the exhaustive per-face scan") {
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 220; ++trial) {
        const int faces = 1 + static_cast<int>(rng() % 50);
        const TriangleMesh mesh = helpers::random_mesh(3 + static_cast<int>(rng() % 40), faces, 12.0, rng);
        const MeshDistanceIndex index(mesh);
        const Vec3 q = helpers::random_points(1, 20.0, rng)[0];
        const auto got = index.closest_point(q);
        const auto want = oracles::brute_closest_triangle(mesh, q);
        REQUIRE(got.squared_distance == want.squared_distance);
        REQUIRE(got.point.face_index == want.face_index);
        REQUIRE((got.point.position - want.position).norm() == 0.0);
    }
}

TEST_CASE("closest distance never exceeds the distance to any vertex") {
    std::mt19937_64 rng(24);
    const TriangleMesh mesh = helpers::random_mesh(50, 80, 10.0, rng);
    const MeshDistanceIndex index(mesh);
    for (int trial = 0; trial < 100; ++trial) {
        const Vec3 q = helpers::random_points(1, 30.0, rng)[0];
        const double d = index.distance(q);
        // Vertices referenced by faces are part of the surface.
        for (const auto& f : mesh.faces)
            for (int v : f) CHECK(d <= (q - mesh.vertices[static_cast<std::size_t>(v)]).norm() + 1e-12);
    }
}

TEST_CASE("triangle primitive agrees with a dense barycentric grid search") {
    // Independent check of the projection itself, not just the tree.
    std::mt19937_64 rng(25);
    for (int trial = 0; trial < 40; ++trial) {
        const auto v = helpers::random_points(3, 10.0, rng);
        const Vec3 q = helpers::random_points(1, 15.0, rng)[0];
        const auto tp = closest_point_on_triangle(q, v[0], v[1], v[2]);
        const double got = (q - tp.position).norm();

        double grid_best = std::numeric_limits<double>::infinity();
        const int steps = 120;
        for (int a = 0; a <= steps; ++a)
            for (int b = 0; b <= steps - a; ++b) {
                const double u = static_cast<double>(a) / steps;
                const double w = static_cast<double>(b) / steps;
                const Vec3 p = (1.0 - u - w) * v[0] + u * v[1] + w * v[2];
                grid_best = std::min(grid_best, (q - p).norm());
            }
        const double max_edge = std::max({(v[1] - v[0]).norm(), (v[2] - v[1]).norm(),
                                          (v[2] - v[0]).norm()});
        CHECK(got <= grid_best + 1e-12);                  // true minimum can only be better
        CHECK(grid_best - got <= 1.5 * max_edge / steps); // grid resolution bound
    }
}

TEST_CASE("degenerate triangles fall back to edge distance") {
    const Vec3 a(0, 0, 0), b(4, 0, 0), c(2, 0, 0); // collinear
    const auto tp = closest_point_on_triangle(Vec3(2, 3, 0), a, b, c);
    CHECK((tp.position - Vec3(2, 0, 0)).norm() < 1e-12);
    CHECK(tp.barycentric.minCoeff() >= 0.0);
    CHECK(std::abs(tp.barycentric.sum() - 1.0) < 1e-9);
}

TEST_CASE("face index ties resolve to the lowest index") {
    // Two identical faces listed twice: query must report the first.
    TriangleMesh mesh;
    mesh.vertices = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0)};
    mesh.faces = {{0, 1, 2}, {0, 1, 2}};
    const SurfacePoint sp = closest_point_on_mesh(mesh, Vec3(0.2, 0.2, 5.0));
    CHECK(sp.face_index == 0);
}

TEST_CASE("submesh keeps only fully masked faces") {
    TriangleMesh mesh;
    mesh.vertices = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(1, 1, 0)};
    mesh.faces = {{0, 1, 2}, {1, 3, 2}};
    const TriangleMesh sub = morphfit::submesh_by_vertex_mask(mesh, {1, 1, 1, 0});
    REQUIRE(sub.faces.size() == 1);
    CHECK(sub.faces[0] == std::array<int, 3>{0, 1, 2});
}

TEST_CASE("meshes with no faces are rejected") {
    TriangleMesh mesh;
    mesh.vertices = {Vec3::Zero()};
    CHECK_THROWS_AS(MeshDistanceIndex(mesh), morphfit::ShapeError);
}
