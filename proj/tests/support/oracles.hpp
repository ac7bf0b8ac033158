/*
 * morphfit - joint multi-scan alignment and 3D morphable face model fitting.
 *
 * File: tests/support/oracles.hpp
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

// Brute-force reference implementations for property tests. These stay
// deliberately naive (linear scans, dense normal equations) and independent
// of the indexed / factorized paths they are compared against.

#include "morphfit/model_fit.hpp"
#include "morphfit/triangle_mesh.hpp"
#include "morphfit/types.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <deque>
#include <numeric>
#include <vector>

namespace oracles {

using morphfit::Vec3;

/// k nearest by full scan, sorted ascending by (squared distance, index).
inline std::vector<int> brute_knn(const std::vector<Vec3>& points, const Vec3& query, int k) {
    std::vector<std::pair<double, int>> all;
    all.reserve(points.size());
    for (int i = 0; i < static_cast<int>(points.size()); ++i)
        all.emplace_back((points[static_cast<std::size_t>(i)] - query).squaredNorm(), i);
    std::sort(all.begin(), all.end());
    std::vector<int> out;
    for (int i = 0; i < k && i < static_cast<int>(all.size()); ++i) out.push_back(all[static_cast<std::size_t>(i)].second);
    return out;
}

inline std::vector<int> brute_radius(const std::vector<Vec3>& points, const Vec3& query, double r) {
    std::vector<int> out;
    for (int i = 0; i < static_cast<int>(points.size()); ++i)
        if ((points[static_cast<std::size_t>(i)] - query).squaredNorm() <= r * r) out.push_back(i);
    return out;
}

struct BruteClosest {
    Vec3 position = Vec3::Zero();
    int face_index = -1;
    double squared_distance = std::numeric_limits<double>::infinity();
};

/// Exhaustive scan over every face; first face wins ties.
inline BruteClosest brute_closest_triangle(const morphfit::TriangleMesh& mesh, const Vec3& p) {
    BruteClosest best;
    for (int f = 0; f < mesh.face_count(); ++f) {
        const auto& face = mesh.faces[static_cast<std::size_t>(f)];
        const auto tp = morphfit::closest_point_on_triangle(
            p, mesh.vertices[static_cast<std::size_t>(face[0])],
            mesh.vertices[static_cast<std::size_t>(face[1])],
            mesh.vertices[static_cast<std::size_t>(face[2])]);
        const double d2 = (p - tp.position).squaredNorm();
        if (d2 < best.squared_distance) {
            best.squared_distance = d2;
            best.position = tp.position;
            best.face_index = f;
        }
    }
    return best;
}

/// Same expansion order as the production DBSCAN, but O(n^2) neighborhoods.
inline std::vector<int> brute_dbscan(const std::vector<Vec3>& points, double eps, int min_pts) {
    const int n = static_cast<int>(points.size());
    std::vector<int> label(static_cast<std::size_t>(n), -2);
    auto neighbors_of = [&](int i) {
        return brute_radius(points, points[static_cast<std::size_t>(i)], eps);
    };

    int next_cluster = 0;
    for (int i = 0; i < n; ++i) {
        if (label[static_cast<std::size_t>(i)] != -2) continue;
        const std::vector<int> neighbors = neighbors_of(i);
        if (static_cast<int>(neighbors.size()) < min_pts) {
            label[static_cast<std::size_t>(i)] = -1;
            continue;
        }
        const int cluster = next_cluster++;
        label[static_cast<std::size_t>(i)] = cluster;
        std::deque<int> queue(neighbors.begin(), neighbors.end());
        while (!queue.empty()) {
            const int j = queue.front();
            queue.pop_front();
            if (label[static_cast<std::size_t>(j)] == -1) label[static_cast<std::size_t>(j)] = cluster;
            if (label[static_cast<std::size_t>(j)] != -2) continue;
            label[static_cast<std::size_t>(j)] = cluster;
            const std::vector<int> nj = neighbors_of(j);
            if (static_cast<int>(nj.size()) >= min_pts) queue.insert(queue.end(), nj.begin(), nj.end());
        }
    }
    return label;
}

/// Stacked least squares through explicit dense normal equations.
inline Eigen::VectorXd dense_lstsq_stacked(const std::vector<morphfit::OffsetField>& fields,
                                           const morphfit::MorphableModel& model) {
    const int rank = model.rank();
    Eigen::MatrixXd ata = Eigen::MatrixXd::Zero(rank, rank);
    Eigen::VectorXd atb = Eigen::VectorXd::Zero(rank);
    for (const auto& f : fields)
        for (int v = 0; v < f.vertex_count(); ++v) {
            if (!f.validity[static_cast<std::size_t>(v)]) continue;
            for (int c = 0; c < 3; ++c) {
                const Eigen::RowVectorXd row = model.basis.row(3 * v + c);
                ata += row.transpose() * row;
                atb += row.transpose() * f.offsets(v, c);
            }
        }
    return ata.ldlt().solve(atb);
}

/// Weighted least squares through explicit dense normal equations
/// (row scaling by w on both sides, i.e. w^2 in the normal equations).
inline Eigen::VectorXd dense_lstsq_weighted(const morphfit::AggregateOffsets& agg,
                                            const morphfit::MorphableModel& model,
                                            double regularization = 0.0) {
    const int rank = model.rank();
    Eigen::MatrixXd ata = Eigen::MatrixXd::Zero(rank, rank);
    Eigen::VectorXd atb = Eigen::VectorXd::Zero(rank);
    for (int v = 0; v < agg.vertex_count(); ++v) {
        const double w = static_cast<double>(agg.weight[static_cast<std::size_t>(v)]);
        if (w <= 0.0) continue;
        for (int c = 0; c < 3; ++c) {
            const Eigen::RowVectorXd row = w * model.basis.row(3 * v + c);
            ata += row.transpose() * row;
            atb += row.transpose() * (w * agg.mean_offsets(v, c));
        }
    }
    ata += regularization * Eigen::MatrixXd::Identity(rank, rank);
    return ata.ldlt().solve(atb);
}

} // namespace oracles
