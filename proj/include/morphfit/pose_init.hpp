/*
 * morphfit - joint multi-scan alignment and 3D morphable face model fitting.
 *
 * File: include/morphfit/pose_init.hpp
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

#include "morphfit/icp.hpp"
#include "morphfit/morphable_model.hpp"
#include "morphfit/random.hpp"
#include "morphfit/rigid_transform.hpp"

#include <string>
#include <vector>

namespace morphfit {

struct PoseInitParams {
    int eval_sample_size = 500;      // scan points scored per candidate transform
    double low_confidence_gate_mm = 5.0;
    std::uint64_t rng_seed = 0;
};

struct PoseInitResult {
    RigidTransform transform;
    double mean_distance = 0.0; // evaluation score of the winning triple
    bool low_confidence = false;
    int triples_evaluated = 0;  // degenerate triples excluded
};

namespace detail {

inline double triangle_area(const Vec3& a, const Vec3& b, const Vec3& c) {
    return 0.5 * (b - a).cross(c - a).norm();
}

} // namespace detail

/**
 * Initial pose from named 3D landmarks: every combination of three
 * scan-to-model correspondence pairs yields a candidate rigid transform
 * (collinear triples, triangle area below 1 mm^2 on either side, are
 * skipped). Candidates are scored by the mean point-to-mesh distance of a
 * seeded random subsample of the scan against the mean mesh; the lowest score
 * wins, ties going to the earliest triple in lexicographic order. A winning
 * score above the gate tags the scan low-confidence, which keeps it out of
 * the first geometry estimate.
 */
inline PoseInitResult init_pose_triplets(const LandmarkSet& landmarks, const MorphableModel& model,
                                         const PointCloudScan& scan,
                                         const PoseInitParams& params = PoseInitParams{}) {
    const LandmarkSet model_landmarks = model.mean_landmark_positions();

    // Correspondences restricted to names present on both sides, in name order.
    std::vector<Vec3> scan_pts, model_pts;
    for (const auto& [name, p] : landmarks) {
        const auto it = model_landmarks.find(name);
        if (it == model_landmarks.end()) continue;
        scan_pts.push_back(p);
        model_pts.push_back(it->second);
    }
    const int n = static_cast<int>(scan_pts.size());
    if (n < 3)
        throw InsufficientLandmarks("init_pose_triplets: fewer than 3 landmarks shared with the model");
    if (scan.points.empty()) throw EmptyCloud("init_pose_triplets: empty scan");

    // Evaluation subsample, drawn once.
    std::mt19937_64 rng(params.rng_seed);
    const int total = static_cast<int>(scan.points.size());
    const std::vector<int> picked =
        sample_without_replacement(total, std::min(params.eval_sample_size, total), rng);
    std::vector<Vec3> sample;
    sample.reserve(picked.size());
    for (int i : picked) sample.push_back(scan.points[static_cast<std::size_t>(i)]);

    const MeshDistanceIndex mean_index(model.mean_mesh());

    PoseInitResult result;
    double best_score = std::numeric_limits<double>::infinity();
    constexpr double kMinTriangleArea = 1.0; // mm^2

    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            for (int k = j + 1; k < n; ++k) {
                if (detail::triangle_area(scan_pts[static_cast<std::size_t>(i)],
                                          scan_pts[static_cast<std::size_t>(j)],
                                          scan_pts[static_cast<std::size_t>(k)]) < kMinTriangleArea ||
                    detail::triangle_area(model_pts[static_cast<std::size_t>(i)],
                                          model_pts[static_cast<std::size_t>(j)],
                                          model_pts[static_cast<std::size_t>(k)]) < kMinTriangleArea)
                    continue;

                RigidTransform candidate;
                try {
                    candidate = optimal_rigid_transform(
                        {scan_pts[static_cast<std::size_t>(i)], scan_pts[static_cast<std::size_t>(j)],
                         scan_pts[static_cast<std::size_t>(k)]},
                        {model_pts[static_cast<std::size_t>(i)], model_pts[static_cast<std::size_t>(j)],
                         model_pts[static_cast<std::size_t>(k)]});
                } catch (const DegenerateCorrespondence&) {
                    continue;
                }
                ++result.triples_evaluated;

                double sum = 0.0;
                for (const Vec3& p : sample) sum += mean_index.distance(candidate.apply(p));
                const double score = sum / static_cast<double>(sample.size());
                if (score < best_score) {
                    best_score = score;
                    result.transform = candidate;
                }
            }

    if (result.triples_evaluated == 0)
        throw DegenerateLandmarks("init_pose_triplets: all landmark triples are degenerate");

    result.mean_distance = best_score;
    result.low_confidence = best_score > params.low_confidence_gate_mm;
    return result;
}

} // namespace morphfit
