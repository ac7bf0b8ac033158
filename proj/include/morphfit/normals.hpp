/*
 * morphfit - joint multi-scan alignment and 3D morphable face model fitting.
 *
 * File: include/morphfit/normals.hpp
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

#include "morphfit/spatial_index.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <vector>

namespace morphfit {

struct NormalEstimate {
    Vec3 normal = Vec3::UnitZ();
    /// False when the neighborhood has no well-defined plane (rank < 2).
    bool reliable = true;
};

/**
 * Normal of the least-squares plane through the k points nearest to vertex:
 * the singular direction of the centered neighborhood with the smallest
 * singular value. The sign is made canonical by flipping so the component of
 * largest magnitude is positive. When the two smallest singular values
 * coincide (within 1e-9) the plane is ambiguous and the estimate is flagged
 * unreliable.
 */
inline NormalEstimate estimate_normal(const SpatialIndex& index, const Vec3& vertex, int k = 30) {
    const std::vector<int> nn = index.k_nearest(vertex, k);

    Vec3 centroid = Vec3::Zero();
    for (int i : nn) centroid += index.point(i);
    centroid /= static_cast<double>(nn.size());

    Eigen::Matrix3d scatter = Eigen::Matrix3d::Zero();
    for (int i : nn) {
        const Vec3 d = index.point(i) - centroid;
        scatter += d * d.transpose();
    }

    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(scatter);
    // Eigenvalues ascending; singular values of the centered point matrix are
    // their square roots.
    const double sigma0 = std::sqrt(std::max(eig.eigenvalues()(0), 0.0));
    const double sigma1 = std::sqrt(std::max(eig.eigenvalues()(1), 0.0));

    NormalEstimate est;
    est.normal = eig.eigenvectors().col(0);
    est.reliable = (sigma1 - sigma0) > 1e-9;

    int max_comp = 0;
    est.normal.cwiseAbs().maxCoeff(&max_comp);
    if (est.normal[max_comp] < 0.0) est.normal = -est.normal;
    return est;
}

inline std::vector<NormalEstimate> estimate_normals(const SpatialIndex& index,
                                                    const std::vector<Vec3>& vertices, int k = 30) {
    std::vector<NormalEstimate> out;
    out.reserve(vertices.size());
    for (const Vec3& v : vertices) out.push_back(estimate_normal(index, v, k));
    return out;
}

/// Angle between two directions ignoring orientation: min(theta, pi - theta).
inline double unoriented_angle(const Vec3& a, const Vec3& b) {
    const double c = std::min(std::abs(a.dot(b)) / std::max(a.norm() * b.norm(), 1e-300), 1.0);
    return std::acos(c);
}

} // namespace morphfit
