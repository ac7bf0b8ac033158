/*
 * morphfit - joint multi-scan alignment and 3D morphable face model fitting.
 *
 * File: include/morphfit/io/obj.hpp
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
#include "morphfit/triangle_mesh.hpp"
#include "morphfit/types.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace morphfit::io {

/**
 * Wavefront OBJ subset: 'v' positions and 'f' faces (with optional /vt/vn
 * suffixes, which are ignored). Polygons are fan-triangulated. A file with
 * only 'v' lines reads as a point cloud carried in an empty-face mesh.
 */
inline TriangleMesh read_obj(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw ParseError("obj: cannot open '" + path.string() + "'");

    TriangleMesh mesh;
    std::string line;
    long long line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        std::istringstream ls(line);
        std::string tag;
        ls >> tag;
        if (tag == "v") {
            double x, y, z;
            ls >> x >> y >> z;
            if (ls.fail())
                throw ParseError("obj: malformed vertex at line " + std::to_string(line_no));
            const Vec3 p(x, y, z);
            if (!is_finite(p))
                throw ParseError("obj: non-finite vertex at line " + std::to_string(line_no));
            mesh.vertices.push_back(p);
        } else if (tag == "f") {
            std::vector<int> ids;
            std::string token;
            while (ls >> token) {
                // "i", "i/t", "i//n", "i/t/n" all start with the vertex id.
                char* end = nullptr;
                const long v = std::strtol(token.c_str(), &end, 10);
                if (end == token.c_str() || v <= 0 ||
                    v > static_cast<long>(mesh.vertices.size()))
                    throw ParseError("obj: bad face index '" + token + "' at line " +
                                     std::to_string(line_no));
                ids.push_back(static_cast<int>(v - 1));
            }
            if (ids.size() < 3)
                throw ParseError("obj: face with fewer than 3 vertices at line " +
                                 std::to_string(line_no));
            for (std::size_t i = 1; i + 1 < ids.size(); ++i)
                mesh.faces.push_back({ids[0], ids[i], ids[i + 1]});
        }
        // Every other tag (vn, vt, o, g, s, usemtl, comments) is ignored.
    }
    mesh.validate();
    return mesh;
}

inline void write_obj(const std::filesystem::path& path, const TriangleMesh& mesh) {
    mesh.validate();
    std::ofstream os(path);
    if (!os) throw ParseError("obj: cannot open '" + path.string() + "' for writing");
    char buf[128];
    for (const Vec3& v : mesh.vertices) {
        std::snprintf(buf, sizeof(buf), "v %.9g %.9g %.9g\n", v.x(), v.y(), v.z());
        os << buf;
    }
    for (const auto& f : mesh.faces) os << "f " << f[0] + 1 << " " << f[1] + 1 << " " << f[2] + 1 << "\n";
    if (!os) throw ParseError("obj: write failed for '" + path.string() + "'");
}

inline PointCloudScan read_obj_cloud(const std::filesystem::path& path, std::string scan_id = "") {
    const TriangleMesh mesh = read_obj(path);
    PointCloudScan scan;
    scan.points = mesh.vertices;
    scan.scan_id = std::move(scan_id);
    return scan;
}

} // namespace morphfit::io
