/*
 * morphfit - joint multi-scan alignment and 3D morphable face model fitting.
 *
 * File: include/morphfit/types.hpp
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

#include <Eigen/Core>

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace morphfit {

/// All coordinates are in millimeters.
using Vec3 = Eigen::Vector3d;

using Rgb = std::array<std::uint8_t, 3>;

/**
 * One unstructured 3D scan: point positions plus optional per-point normals
 * and colors. Preprocessing never moves a point; points it rejects are parked
 * in removed_points so the full cloud can be restored later.
 */
struct PointCloudScan {
    std::vector<Vec3> points;
    std::optional<std::vector<Vec3>> normals; // unit length, same cardinality as points
    std::optional<std::vector<Rgb>> colors;
    std::string scan_id;
    std::string subject_label;
    std::vector<Vec3> removed_points;

    std::size_t size() const { return points.size(); }
};

/// Named 3D landmark positions on a scan, keyed by a canonical vocabulary.
using LandmarkSet = std::map<std::string, Vec3>;

inline bool is_finite(const Vec3& v) {
    return std::isfinite(v.x()) && std::isfinite(v.y()) && std::isfinite(v.z());
}

constexpr double kPi = 3.14159265358979323846;

inline double deg_to_rad(double deg) { return deg * kPi / 180.0; }
inline double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

} // namespace morphfit
