/*
 * morphfit - joint multi-scan alignment and 3D morphable face model fitting.
 *
 * File: include/morphfit/rigid_transform.hpp
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

#include "morphfit/errors.hpp"
#include "morphfit/types.hpp"

#include <Eigen/Dense>

#include <vector>

namespace morphfit {

/**
 * Proper rigid motion: x -> rotation * x + translation.
 * The rotation stays orthonormal with determinant +1 (within 1e-9) under
 * composition and inversion.
 */
struct RigidTransform {
    Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
    Vec3 translation = Vec3::Zero();

    Vec3 apply(const Vec3& p) const { return rotation * p + translation; }

    std::vector<Vec3> apply(const std::vector<Vec3>& pts) const {
        std::vector<Vec3> out;
        out.reserve(pts.size());
        for (const Vec3& p : pts) out.push_back(apply(p));
        return out;
    }

    RigidTransform inverse() const {
        RigidTransform inv;
        inv.rotation = rotation.transpose();
        inv.translation = -(inv.rotation * translation);
        return inv;
    }

    /// (a * b)(x) == a(b(x))
    friend RigidTransform operator*(const RigidTransform& a, const RigidTransform& b) {
        RigidTransform out;
        out.rotation = a.rotation * b.rotation;
        out.translation = a.rotation * b.translation + a.translation;
        return out;
    }

    /// Deviation from a proper rotation: max of |R^T R - I| entries and |det(R) - 1|.
    double orthonormality_error() const {
        const Eigen::Matrix3d gram = rotation.transpose() * rotation;
        double err = (gram - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
        return std::max(err, std::abs(rotation.determinant() - 1.0));
    }

    bool is_rigid(double tol = 1e-9) const { return orthonormality_error() <= tol; }

    /// Nearest proper rotation (polar projection through SVD); translation unchanged.
    RigidTransform orthonormalized() const {
        Eigen::JacobiSVD<Eigen::Matrix3d> svd(rotation, Eigen::ComputeFullU | Eigen::ComputeFullV);
        Eigen::Matrix3d r = svd.matrixU() * svd.matrixV().transpose();
        if (r.determinant() < 0) {
            Eigen::Matrix3d flip = Eigen::Matrix3d::Identity();
            flip(2, 2) = -1.0;
            r = svd.matrixU() * flip * svd.matrixV().transpose();
        }
        return {r, translation};
    }

    Eigen::Matrix4d homogeneous() const {
        Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
        m.block<3, 3>(0, 0) = rotation;
        m.block<3, 1>(0, 3) = translation;
        return m;
    }

    static RigidTransform from_homogeneous(const Eigen::Matrix4d& m) {
        RigidTransform t;
        t.rotation = m.block<3, 3>(0, 0);
        t.translation = m.block<3, 1>(0, 3);
        return t;
    }
};

/// Rotation angle (radians) of the relative rotation between two transforms.
inline double rotation_angle_between(const RigidTransform& a, const RigidTransform& b) {
    const Eigen::Matrix3d rel = a.rotation.transpose() * b.rotation;
    const double c = std::clamp((rel.trace() - 1.0) / 2.0, -1.0, 1.0);
    return std::acos(c);
}

/**
 * Least-squares rigid motion mapping src onto dst: minimizes
 * sum_i |R * src[i] + t - dst[i]|^2 over proper rotations (no reflection).
 * Closed-form orthogonal Procrustes through the SVD of the cross-covariance,
 * with the usual sign correction on the smallest singular direction.
 *
 * Throws DegenerateCorrespondence when src is collinear or coincident.
 */
inline RigidTransform optimal_rigid_transform(const std::vector<Vec3>& src,
                                              const std::vector<Vec3>& dst) {
    if (src.size() != dst.size())
        throw ShapeError("optimal_rigid_transform: src and dst sizes differ");
    const std::size_t n = src.size();
    if (n < 3)
        throw DegenerateCorrespondence("optimal_rigid_transform: need at least 3 correspondences");

    Vec3 src_centroid = Vec3::Zero(), dst_centroid = Vec3::Zero();
    for (std::size_t i = 0; i < n; ++i) {
        src_centroid += src[i];
        dst_centroid += dst[i];
    }
    src_centroid /= static_cast<double>(n);
    dst_centroid /= static_cast<double>(n);

    Eigen::Matrix3d src_scatter = Eigen::Matrix3d::Zero();
    Eigen::Matrix3d cross = Eigen::Matrix3d::Zero();
    for (std::size_t i = 0; i < n; ++i) {
        const Vec3 s = src[i] - src_centroid;
        const Vec3 d = dst[i] - dst_centroid;
        src_scatter += s * s.transpose();
        cross += s * d.transpose();
    }

    // Collinear or coincident source points leave the rotation underdetermined.
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> scatter_eig(src_scatter);
    const double s_large = std::sqrt(std::max(scatter_eig.eigenvalues()(2), 0.0));
    const double s_mid = std::sqrt(std::max(scatter_eig.eigenvalues()(1), 0.0));
    if (s_mid <= 1e-9 * std::max(s_large, 1.0))
        throw DegenerateCorrespondence("optimal_rigid_transform: source points are collinear or coincident");

    Eigen::JacobiSVD<Eigen::Matrix3d> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Eigen::Matrix3d d = Eigen::Matrix3d::Identity();
    if ((svd.matrixV() * svd.matrixU().transpose()).determinant() < 0) d(2, 2) = -1.0;

    RigidTransform out;
    out.rotation = svd.matrixV() * d * svd.matrixU().transpose();
    out.translation = dst_centroid - out.rotation * src_centroid;
    return out;
}

} // namespace morphfit
