/*
 * morphfit - joint multi-scan alignment and 3D morphable face model fitting.
 *
 * File: include/morphfit/preprocess.hpp
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

#include "morphfit/normals.hpp"
#include "morphfit/spatial_index.hpp"
#include "morphfit/types.hpp"

#include <deque>
#include <vector>

namespace morphfit {

struct FilterParams {
    int normal_k = 10;               // neighborhood size of the roughness test
    double angle_threshold_deg = 8.0;
    double dbscan_eps_mm = 1.5;
    int dbscan_min_pts = 5;
    double crop_radius_mm = 120.0;
    int normal_estimation_k = 30;    // neighborhood size for normal estimation

    void validate() const {
        if (normal_k < 1 || normal_estimation_k < 3 || dbscan_min_pts < 1)
            throw InvalidArgument("FilterParams: neighborhood sizes must be positive");
        if (angle_threshold_deg <= 0.0 || dbscan_eps_mm <= 0.0 || crop_radius_mm <= 0.0)
            throw InvalidArgument("FilterParams: thresholds must be positive");
    }
};

namespace detail {

/// Keeps points[i] where keep[i], moving the rest into removed_points.
/// Normals and colors are subset alongside so cardinalities stay consistent.
inline PointCloudScan subset_scan(const PointCloudScan& scan, const std::vector<std::uint8_t>& keep) {
    PointCloudScan out;
    out.scan_id = scan.scan_id;
    out.subject_label = scan.subject_label;
    out.removed_points = scan.removed_points;
    if (scan.normals) out.normals.emplace();
    if (scan.colors) out.colors.emplace();
    for (std::size_t i = 0; i < scan.points.size(); ++i) {
        if (keep[i]) {
            out.points.push_back(scan.points[i]);
            if (scan.normals) out.normals->push_back((*scan.normals)[i]);
            if (scan.colors) out.colors->push_back((*scan.colors)[i]);
        } else {
            out.removed_points.push_back(scan.points[i]);
        }
    }
    return out;
}

} // namespace detail

/**
 * DBSCAN over the scan points: eps-radius neighborhoods (distance <= eps),
 * a point is core when its neighborhood (itself included) has at least
 * min_pts members. Returns per-point cluster labels, -1 for noise. Points are
 * seeded in ascending index order, so labels are deterministic.
 */
inline std::vector<int> dbscan_labels(const std::vector<Vec3>& points, double eps, int min_pts) {
    const int n = static_cast<int>(points.size());
    std::vector<int> label(static_cast<std::size_t>(n), -2); // -2 unvisited, -1 noise
    if (n == 0) return label;
    const SpatialIndex index(points);

    int next_cluster = 0;
    for (int i = 0; i < n; ++i) {
        if (label[static_cast<std::size_t>(i)] != -2) continue;
        const std::vector<int> neighbors = index.radius_indices(points[static_cast<std::size_t>(i)], eps);
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
            const std::vector<int> nj = index.radius_indices(points[static_cast<std::size_t>(j)], eps);
            if (static_cast<int>(nj.size()) >= min_pts)
                queue.insert(queue.end(), nj.begin(), nj.end());
        }
    }
    return label;
}

/**
 * Removes rough-surface points (hair): a point stays when the mean unoriented
 * angle between its normal and the normals of its normal_k nearest neighbors
 * is at most angle_threshold_deg. Points with unreliable normals are treated
 * as rough. Normals are estimated on the fly (normal_estimation_k neighbors)
 * when the scan does not carry them.
 */
inline PointCloudScan filter_by_roughness(const PointCloudScan& scan, const FilterParams& params) {
    params.validate();
    const int n = static_cast<int>(scan.points.size());
    if (n < params.normal_k + 1)
        throw InsufficientPoints("filter_by_roughness: need at least normal_k + 1 points");

    const SpatialIndex index(scan.points);

    std::vector<Vec3> normals;
    std::vector<std::uint8_t> reliable(static_cast<std::size_t>(n), 1);
    if (scan.normals) {
        normals = *scan.normals;
    } else {
        const int est_k = std::min(params.normal_estimation_k, n);
        normals.reserve(static_cast<std::size_t>(n));
        for (const Vec3& p : scan.points) {
            const NormalEstimate est = estimate_normal(index, p, est_k);
            normals.push_back(est.normal);
            reliable[normals.size() - 1] = est.reliable ? 1 : 0;
        }
    }

    const double threshold_rad = deg_to_rad(params.angle_threshold_deg);
    std::vector<std::uint8_t> keep(static_cast<std::size_t>(n), 0);
    for (int i = 0; i < n; ++i) {
        if (!reliable[static_cast<std::size_t>(i)]) continue;
        // Neighborhood of the normal_k closest points, the point itself excluded.
        std::vector<int> nn = index.k_nearest(scan.points[static_cast<std::size_t>(i)], params.normal_k + 1);
        auto self = std::find(nn.begin(), nn.end(), i);
        if (self != nn.end()) nn.erase(self);
        else nn.pop_back();

        double angle_sum = 0.0;
        for (int j : nn)
            angle_sum += unoriented_angle(normals[static_cast<std::size_t>(i)],
                                          normals[static_cast<std::size_t>(j)]);
        const double mean_angle = angle_sum / static_cast<double>(nn.size());
        keep[static_cast<std::size_t>(i)] = mean_angle <= threshold_rad ? 1 : 0;
    }

    return detail::subset_scan(scan, keep);
}

/**
 * Keeps only the largest DBSCAN cluster (ties: the cluster containing the
 * lowest point index); noise and smaller clusters go to removed_points.
 * Throws EmptyAfterClustering when every point is noise.
 */
inline PointCloudScan largest_cluster(const PointCloudScan& scan, const FilterParams& params) {
    params.validate();
    if (scan.points.empty()) throw EmptyCloud("largest_cluster: empty scan");

    const std::vector<int> labels =
        dbscan_labels(scan.points, params.dbscan_eps_mm, params.dbscan_min_pts);

    int cluster_count = 0;
    for (int l : labels) cluster_count = std::max(cluster_count, l + 1);
    if (cluster_count == 0) throw EmptyAfterClustering("largest_cluster: all points are noise");

    std::vector<int> sizes(static_cast<std::size_t>(cluster_count), 0);
    std::vector<int> first_member(static_cast<std::size_t>(cluster_count),
                                  std::numeric_limits<int>::max());
    for (int i = 0; i < static_cast<int>(labels.size()); ++i) {
        const int l = labels[static_cast<std::size_t>(i)];
        if (l < 0) continue;
        ++sizes[static_cast<std::size_t>(l)];
        first_member[static_cast<std::size_t>(l)] = std::min(first_member[static_cast<std::size_t>(l)], i);
    }

    int best = 0;
    for (int c = 1; c < cluster_count; ++c) {
        if (sizes[static_cast<std::size_t>(c)] > sizes[static_cast<std::size_t>(best)] ||
            (sizes[static_cast<std::size_t>(c)] == sizes[static_cast<std::size_t>(best)] &&
             first_member[static_cast<std::size_t>(c)] < first_member[static_cast<std::size_t>(best)]))
            best = c;
    }

    std::vector<std::uint8_t> keep(labels.size(), 0);
    for (std::size_t i = 0; i < labels.size(); ++i) keep[i] = labels[i] == best ? 1 : 0;
    return detail::subset_scan(scan, keep);
}

/**
 * Keeps points within crop_radius_mm of the landmark centroid.
 * Throws EmptyAfterCrop when nothing survives.
 */
inline PointCloudScan crop_to_face(const PointCloudScan& scan, const LandmarkSet& landmarks,
                                   const FilterParams& params) {
    params.validate();
    if (landmarks.empty()) throw InsufficientLandmarks("crop_to_face: no landmarks");

    Vec3 centroid = Vec3::Zero();
    for (const auto& [name, p] : landmarks) centroid += p;
    centroid /= static_cast<double>(landmarks.size());

    const double r2 = params.crop_radius_mm * params.crop_radius_mm;
    std::vector<std::uint8_t> keep(scan.points.size(), 0);
    bool any = false;
    for (std::size_t i = 0; i < scan.points.size(); ++i) {
        keep[i] = (scan.points[i] - centroid).squaredNorm() <= r2 ? 1 : 0;
        any = any || keep[i];
    }
    if (!any) throw EmptyAfterCrop("crop_to_face: no points within crop radius");
    return detail::subset_scan(scan, keep);
}

/**
 * Re-appends removed_points to points. Per-point normals and colors are
 * dropped when anything is restored, since they were not retained for the
 * removed set.
 */
inline PointCloudScan restore_removed(const PointCloudScan& scan) {
    PointCloudScan out = scan;
    if (out.removed_points.empty()) return out;
    out.points.insert(out.points.end(), out.removed_points.begin(), out.removed_points.end());
    out.removed_points.clear();
    out.normals.reset();
    out.colors.reset();
    return out;
}

} // namespace morphfit
