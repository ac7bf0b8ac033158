/*
 * morphfit - joint multi-scan alignment and 3D morphable face model fitting.
 *
 * File: include/morphfit/icp.hpp
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

#include "morphfit/random.hpp"
#include "morphfit/rigid_transform.hpp"
#include "morphfit/triangle_mesh.hpp"

#include <cmath>
#include <vector>

namespace morphfit {

struct IcpParams {
    double downsample_fraction = 0.1;
    int max_iterations = 100;
    double convergence_tol_mm = 1e-3; // change in mean correspondence distance
    std::uint64_t rng_seed = 0;

    void validate() const {
        if (!(downsample_fraction > 0.0) || downsample_fraction > 1.0)
            throw InvalidArgument("IcpParams: downsample_fraction must be in (0, 1]");
        if (max_iterations < 1) throw InvalidArgument("IcpParams: max_iterations must be >= 1");
    }
};

struct AlignmentResult {
    RigidTransform transform;
    int iterations_used = 0;
    double final_mean_distance = 0.0; // over the downsampled set against the cropped mesh
    bool converged = false;
    std::vector<double> mean_distance_history; // one entry per correspondence pass
};

/// Mean and mean squared closest-point distance of a scan against a mesh.
inline std::pair<double, double> point_to_mesh_error(const std::vector<Vec3>& points,
                                                     const MeshDistanceIndex& index) {
    if (points.empty()) throw EmptyCloud("point_to_mesh_error: empty scan");
    double sum = 0.0, sum_sq = 0.0;
    for (const Vec3& p : points) {
        const double d2 = index.closest_point(p).squared_distance;
        sum += std::sqrt(d2);
        sum_sq += d2;
    }
    const double n = static_cast<double>(points.size());
    return {sum / n, sum_sq / n};
}

inline std::pair<double, double> point_to_mesh_error(const PointCloudScan& scan,
                                                     const TriangleMesh& mesh) {
    return point_to_mesh_error(scan.points, MeshDistanceIndex(mesh));
}

/**
 * Rigidly aligns a scan to a mesh with a modified ICP: the cloud is randomly
 * downsampled once (seeded, without replacement) and matched only against the
 * faces whose vertices all lie in crop_mask. Each iteration pairs the
 * transformed sample with closest surface points, solves the optimal rigid
 * transform, and accumulates it onto the initial transform; iteration stops
 * when the mean correspondence distance changes by less than the tolerance.
 *
 * Degenerate correspondences abort the loop and return the initial transform
 * with converged == false.
 */
inline AlignmentResult icp_align(const PointCloudScan& scan, const TriangleMesh& mesh,
                                 const std::vector<std::uint8_t>& crop_mask, const IcpParams& params,
                                 const RigidTransform& initial = RigidTransform{}) {
    params.validate();
    if (scan.points.empty()) throw EmptyCloud("icp_align: empty scan");

    const TriangleMesh cropped = submesh_by_vertex_mask(mesh, crop_mask);
    if (cropped.faces.empty())
        throw ShapeError("icp_align: crop mask leaves no complete faces");
    const MeshDistanceIndex cropped_index(cropped);

    // Downsample once before iterating.
    const int total = static_cast<int>(scan.points.size());
    const int sample_size =
        std::max(3, std::min(total, static_cast<int>(std::llround(params.downsample_fraction * total))));
    std::mt19937_64 rng(params.rng_seed);
    const std::vector<int> picked = sample_without_replacement(total, sample_size, rng);
    std::vector<Vec3> sample;
    sample.reserve(picked.size());
    for (int i : picked) sample.push_back(scan.points[static_cast<std::size_t>(i)]);

    AlignmentResult result;
    result.transform = initial;

    std::vector<Vec3> moved(sample.size());
    std::vector<Vec3> matched(sample.size());
    auto pair_and_measure = [&]() {
        double sum = 0.0;
        for (std::size_t i = 0; i < sample.size(); ++i) {
            moved[i] = result.transform.apply(sample[i]);
            const auto cp = cropped_index.closest_point(moved[i]);
            matched[i] = cp.point.position;
            sum += std::sqrt(cp.squared_distance);
        }
        return sum / static_cast<double>(sample.size());
    };

    double prev = pair_and_measure();
    result.mean_distance_history.push_back(prev);
    result.final_mean_distance = prev;

    for (int it = 1; it <= params.max_iterations; ++it) {
        RigidTransform delta;
        try {
            delta = optimal_rigid_transform(moved, matched);
        } catch (const DegenerateCorrespondence&) {
            result.transform = initial;
            result.converged = false;
            return result;
        }
        result.transform = delta * result.transform;
        result.iterations_used = it;

        const double current = pair_and_measure();
        result.mean_distance_history.push_back(current);
        result.final_mean_distance = current;
        if (std::abs(prev - current) < params.convergence_tol_mm) {
            result.converged = true;
            break;
        }
        prev = current;
    }

    if (result.transform.orthonormality_error() > 1e-10)
        result.transform = result.transform.orthonormalized();
    return result;
}

} // namespace morphfit
