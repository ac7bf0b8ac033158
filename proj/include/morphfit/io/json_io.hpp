/*
 * morphfit - joint multi-scan alignment and 3D morphable face model fitting.
 *
 * File: include/morphfit/io/json_io.hpp
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
#include "morphfit/rigid_transform.hpp"
#include "morphfit/types.hpp"

#include <json.hpp>

#include <Eigen/Core>

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

namespace morphfit::io {

inline nlohmann::json load_json(const std::filesystem::path& path, const char* what) {
    std::ifstream is(path);
    if (!is) throw FormatError(std::string(what) + ": cannot open '" + path.string() + "'");
    try {
        return nlohmann::json::parse(is);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string(what) + ": invalid JSON in '" + path.string() + "': " + e.what());
    }
}

inline void save_json(const std::filesystem::path& path, const nlohmann::json& j, const char* what) {
    std::ofstream os(path);
    if (!os) throw FormatError(std::string(what) + ": cannot open '" + path.string() + "' for writing");
    os << j.dump(2) << "\n";
    if (!os) throw FormatError(std::string(what) + ": write failed for '" + path.string() + "'");
}

/// Landmark file: a JSON object mapping landmark names to [x, y, z] (mm).
inline LandmarkSet read_landmarks(const std::filesystem::path& path) {
    const nlohmann::json j = load_json(path, "landmarks");
    if (!j.is_object()) throw FormatError("landmarks: top level must be an object");
    LandmarkSet out;
    for (const auto& [name, value] : j.items()) {
        if (!value.is_array() || value.size() != 3)
            throw FormatError("landmarks: '" + name + "' must be [x, y, z]");
        Vec3 p;
        for (int c = 0; c < 3; ++c) {
            if (!value[static_cast<std::size_t>(c)].is_number())
                throw FormatError("landmarks: '" + name + "' has a non-numeric coordinate");
            p[c] = value[static_cast<std::size_t>(c)].get<double>();
        }
        if (!is_finite(p)) throw FormatError("landmarks: '" + name + "' is not finite");
        out[name] = p;
    }
    return out;
}

inline void write_landmarks(const std::filesystem::path& path, const LandmarkSet& landmarks) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [name, p] : landmarks) j[name] = {p.x(), p.y(), p.z()};
    save_json(path, j, "landmarks");
}

/**
 * Identity embedding file: a JSON array of numbers forming a unit vector.
 * Norms within 1e-6 of one pass through; deviations up to 1e-2 are
 * renormalized; anything further off is rejected. A nonzero expected_dim
 * enforces the dimension.
 */
inline Eigen::VectorXd read_embedding(const std::filesystem::path& path, int expected_dim = 0) {
    const nlohmann::json j = load_json(path, "embedding");
    if (!j.is_array()) throw FormatError("embedding: top level must be an array");
    Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number()) throw FormatError("embedding: non-numeric entry");
        v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
    }
    if (expected_dim > 0 && v.size() != expected_dim)
        throw FormatError("embedding: expected dimension " + std::to_string(expected_dim) + ", got " +
                          std::to_string(v.size()));
    const double norm = v.norm();
    if (std::abs(norm - 1.0) > 1e-2)
        throw FormatError("embedding: norm " + std::to_string(norm) + " is not close to 1");
    if (std::abs(norm - 1.0) > 1e-6) v /= norm;
    return v;
}

inline void write_embedding(const std::filesystem::path& path, const Eigen::VectorXd& v) {
    nlohmann::json j = nlohmann::json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) j.push_back(v(i));
    save_json(path, j, "embedding");
}

/// Transform file: a bare 4x4 row-major homogeneous matrix as nested arrays.
inline nlohmann::json transform_to_json(const RigidTransform& t) {
    const Eigen::Matrix4d m = t.homogeneous();
    nlohmann::json rows = nlohmann::json::array();
    for (int r = 0; r < 4; ++r) {
        nlohmann::json row = nlohmann::json::array();
        for (int c = 0; c < 4; ++c) row.push_back(m(r, c));
        rows.push_back(row);
    }
    return rows;
}

inline RigidTransform transform_from_json(const nlohmann::json& j) {
    if (!j.is_array() || j.size() != 4) throw FormatError("transform: expected a 4x4 matrix");
    Eigen::Matrix4d m;
    for (int r = 0; r < 4; ++r) {
        const auto& row = j[static_cast<std::size_t>(r)];
        if (!row.is_array() || row.size() != 4) throw FormatError("transform: expected a 4x4 matrix");
        for (int c = 0; c < 4; ++c) {
            if (!row[static_cast<std::size_t>(c)].is_number())
                throw FormatError("transform: non-numeric matrix entry");
            m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
        }
    }
    if ((m.row(3) - Eigen::RowVector4d(0, 0, 0, 1)).cwiseAbs().maxCoeff() > 1e-9)
        throw FormatError("transform: bottom row must be [0, 0, 0, 1]");
    RigidTransform t = RigidTransform::from_homogeneous(m);
    if (t.orthonormality_error() > 1e-6)
        throw FormatError("transform: rotation block is not orthonormal");
    if (!t.is_rigid()) t = t.orthonormalized();
    return t;
}

inline void write_transform(const std::filesystem::path& path, const RigidTransform& t) {
    save_json(path, transform_to_json(t), "transform");
}

inline RigidTransform read_transform(const std::filesystem::path& path) {
    return transform_from_json(load_json(path, "transform"));
}

/// One scan's file references inside a run manifest.
struct ManifestScan {
    std::string scan_id;
    std::filesystem::path cloud;
    std::filesystem::path landmarks;
    std::optional<std::filesystem::path> embedding;
};

struct ManifestSubject {
    std::string subject_id;
    std::vector<ManifestScan> scans;
};

/// Run manifest: the model artifact plus subjects -> scan/landmark/embedding files.
struct Manifest {
    std::filesystem::path model;
    std::vector<ManifestSubject> subjects;
};

inline Manifest read_manifest(const std::filesystem::path& path) {
    const nlohmann::json j = load_json(path, "manifest");
    const std::filesystem::path base = path.parent_path();
    Manifest m;
    try {
        m.model = base / j.at("model").get<std::string>();
        for (const auto& js : j.at("subjects")) {
            ManifestSubject subject;
            subject.subject_id = js.at("subject_id").get<std::string>();
            for (const auto& jscan : js.at("scans")) {
                ManifestScan scan;
                scan.scan_id = jscan.at("scan_id").get<std::string>();
                scan.cloud = base / jscan.at("cloud").get<std::string>();
                scan.landmarks = base / jscan.at("landmarks").get<std::string>();
                if (jscan.contains("embedding") && !jscan.at("embedding").is_null())
                    scan.embedding = base / jscan.at("embedding").get<std::string>();
                subject.scans.push_back(std::move(scan));
            }
            m.subjects.push_back(std::move(subject));
        }
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("manifest: missing or malformed field: ") + e.what());
    }
    if (m.subjects.empty()) throw FormatError("manifest: no subjects");
    return m;
}

} // namespace morphfit::io
