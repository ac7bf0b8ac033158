/*
 * morphfit - joint multi-scan alignment and 3D morphable face model fitting.
 *
 * File: tests/support/helpers.hpp
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
#pragma once

#include "morphfit/rigid_transform.hpp"
#include "morphfit/triangle_mesh.hpp"
#include "morphfit/types.hpp"

#include <Eigen/Geometry>

#include <filesystem>
#include <random>
#include <string>
#include <vector>

namespace helpers {

using morphfit::RigidTransform;
using morphfit::TriangleMesh;
using morphfit::Vec3;

inline std::vector<Vec3> random_points(int n, double half_extent, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> dist(-half_extent, half_extent);
    std::vector<Vec3> pts;
    pts.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) pts.emplace_back(dist(rng), dist(rng), dist(rng));
    return pts;
}

inline Eigen::Matrix3d random_rotation(std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::Quaterniond q(gauss(rng), gauss(rng), gauss(rng), gauss(rng));
    q.normalize();
    return q.toRotationMatrix();
}

inline RigidTransform random_rigid(std::mt19937_64& rng, double translation_extent = 50.0) {
    std::uniform_real_distribution<double> dist(-translation_extent, translation_extent);
    RigidTransform t;
    t.rotation = random_rotation(rng);
    t.translation = Vec3(dist(rng), dist(rng), dist(rng));
    return t;
}

/// Rotation by angle_rad about a random axis.
inline Eigen::Matrix3d small_rotation(double angle_rad, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Vec3 axis(gauss(rng), gauss(rng), gauss(rng));
    axis.normalize();
    return Eigen::AngleAxisd(angle_rad, axis).toRotationMatrix();
}

/// Mesh of faces over a shared random vertex pool; generic position, no
/// degenerate faces by construction probability.
inline TriangleMesh random_mesh(int vertex_count, int face_count, double extent,
                                std::mt19937_64& rng) {
    TriangleMesh mesh;
    mesh.vertices = random_points(vertex_count, extent, rng);
    std::uniform_int_distribution<int> pick(0, vertex_count - 1);
    while (static_cast<int>(mesh.faces.size()) < face_count) {
        const int a = pick(rng), b = pick(rng), c = pick(rng);
        if (a == b || b == c || a == c) continue;
        mesh.faces.push_back({a, b, c});
    }
    return mesh;
}

/// Regular grid over [0, size]^2 at z = 0, two triangles per cell.
inline TriangleMesh plane_grid_mesh(int cells, double size) {
    TriangleMesh mesh;
    const int n = cells + 1;
    const double step = size / cells;
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) mesh.vertices.emplace_back(c * step, r * step, 0.0);
    auto vid = [n](int r, int c) { return r * n + c; };
    for (int r = 0; r < cells; ++r)
        for (int c = 0; c < cells; ++c) {
            mesh.faces.push_back({vid(r, c), vid(r, c + 1), vid(r + 1, c)});
            mesh.faces.push_back({vid(r, c + 1), vid(r + 1, c + 1), vid(r + 1, c)});
        }
    return mesh;
}

/// Uniform area-weighted surface samples of a mesh.
inline std::vector<Vec3> sample_mesh_surface(const TriangleMesh& mesh, int count,
                                             std::mt19937_64& rng) {
    std::vector<double> cumulative;
    cumulative.reserve(mesh.faces.size());
    double total = 0.0;
    for (const auto& f : mesh.faces) {
        const Vec3& a = mesh.vertices[static_cast<std::size_t>(f[0])];
        const Vec3& b = mesh.vertices[static_cast<std::size_t>(f[1])];
        const Vec3& c = mesh.vertices[static_cast<std::size_t>(f[2])];
        total += 0.5 * (b - a).cross(c - a).norm();
        cumulative.push_back(total);
    }
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<Vec3> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        const double r = unit(rng) * total;
        const auto it = std::lower_bound(cumulative.begin(), cumulative.end(), r);
        const auto fi = static_cast<std::size_t>(it - cumulative.begin());
        const auto& f = mesh.faces[std::min(fi, mesh.faces.size() - 1)];
        double u = unit(rng), v = unit(rng);
        if (u + v > 1.0) {
            u = 1.0 - u;
            v = 1.0 - v;
        }
        out.push_back(mesh.vertices[static_cast<std::size_t>(f[0])] * (1.0 - u - v) +
                      mesh.vertices[static_cast<std::size_t>(f[1])] * u +
                      mesh.vertices[static_cast<std::size_t>(f[2])] * v);
    }
    return out;
}

/// Unique scratch directory under the system temp dir, removed on destruction.
struct TempDir {
    std::filesystem::path path;

    explicit TempDir(const std::string& tag) {
        path = std::filesystem::temp_directory_path() /
               ("morphfit_test_" + tag + "_" + std::to_string(std::random_device{}()));
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
};

} // namespace helpers
