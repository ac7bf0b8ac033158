/*
 * morphfit - joint multi-scan alignment and 3D morphable face model fitting.
 *
 * File: include/morphfit/triangle_mesh.hpp
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

#include <algorithm>
#include <limits>
#include <map>
#include <numeric>
#include <string>
#include <vector>

namespace morphfit {

/// Template-topology triangle mesh. Immutable by convention once built.
struct TriangleMesh {
    std::vector<Vec3> vertices;
    std::vector<std::array<int, 3>> faces;
    std::map<std::string, std::vector<std::uint8_t>> vertex_masks;

    int vertex_count() const { return static_cast<int>(vertices.size()); }
    int face_count() const { return static_cast<int>(faces.size()); }

    void validate() const {
        for (const auto& f : faces)
            for (int v : f)
                if (v < 0 || v >= vertex_count())
                    throw ShapeError("TriangleMesh: face index out of range");
        for (const auto& [name, mask] : vertex_masks)
            if (mask.size() != vertices.size())
                throw ShapeError("TriangleMesh: mask '" + name + "' has wrong cardinality");
    }
};

/// A point on a mesh surface: position, owning face, barycentric coordinates.
struct SurfacePoint {
    Vec3 position = Vec3::Zero();
    int face_index = -1;
    Vec3 barycentric = Vec3::Zero();
};

namespace detail {

struct TrianglePoint {
    Vec3 position;
    Vec3 barycentric;
};

inline TrianglePoint closest_on_segment(const Vec3& p, const Vec3& a, const Vec3& b,
                                        int corner_a, int corner_b) {
    const Vec3 ab = b - a;
    const double len2 = ab.squaredNorm();
    double t = len2 > 0.0 ? std::clamp(ab.dot(p - a) / len2, 0.0, 1.0) : 0.0;
    TrianglePoint out;
    out.position = a + t * ab;
    out.barycentric = Vec3::Zero();
    out.barycentric[corner_a] = 1.0 - t;
    out.barycentric[corner_b] = t;
    return out;
}

} // namespace detail

/**
 * Closest point to p on triangle (a, b, c), with barycentric coordinates.
 * Region-based projection handling face interior, edges and vertices;
 * degenerate (near zero area) triangles fall back to the closest edge.
 */
inline detail::TrianglePoint closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b,
                                                       const Vec3& c) {
    const Vec3 ab = b - a;
    const Vec3 ac = c - a;

    const double area2 = ab.cross(ac).squaredNorm();
    const double scale = std::max({ab.squaredNorm(), ac.squaredNorm(), (c - b).squaredNorm()});
    if (area2 <= 1e-24 * scale * scale) {
        detail::TrianglePoint best = detail::closest_on_segment(p, a, b, 0, 1);
        double best_d2 = (p - best.position).squaredNorm();
        for (const auto& cand : {detail::closest_on_segment(p, b, c, 1, 2),
                                 detail::closest_on_segment(p, a, c, 0, 2)}) {
            const double d2 = (p - cand.position).squaredNorm();
            if (d2 < best_d2) {
                best = cand;
                best_d2 = d2;
            }
        }
        return best;
    }

    const Vec3 ap = p - a;
    const double d1 = ab.dot(ap);
    const double d2 = ac.dot(ap);
    if (d1 <= 0.0 && d2 <= 0.0) return {a, {1.0, 0.0, 0.0}};

    const Vec3 bp = p - b;
    const double d3 = ab.dot(bp);
    const double d4 = ac.dot(bp);
    if (d3 >= 0.0 && d4 <= d3) return {b, {0.0, 1.0, 0.0}};

    const double vc = d1 * d4 - d3 * d2;
    if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) {
        const double v = d1 / (d1 - d3);
        return {a + v * ab, {1.0 - v, v, 0.0}};
    }

    const Vec3 cp = p - c;
    const double d5 = ab.dot(cp);
    const double d6 = ac.dot(cp);
    if (d6 >= 0.0 && d5 <= d6) return {c, {0.0, 0.0, 1.0}};

    const double vb = d5 * d2 - d1 * d6;
    if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) {
        const double w = d2 / (d2 - d6);
        return {a + w * ac, {1.0 - w, 0.0, w}};
    }

    const double va = d3 * d6 - d5 * d4;
    if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
        const double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return {b + w * (c - b), {0.0, 1.0 - w, w}};
    }

    const double denom = 1.0 / (va + vb + vc);
    const double v = vb * denom;
    const double w = vc * denom;
    return {a + ab * v + ac * w, {1.0 - v - w, v, w}};
}

struct ClosestPointResult {
    SurfacePoint point;
    double squared_distance = std::numeric_limits<double>::infinity();
};

/**
 * AABB tree over the faces of a mesh for exact closest-point queries.
 * Queries return the global minimum over all triangles; distance ties are
 * broken by the lowest face index, matching an exhaustive scan. Immutable
 * after construction and shareable across threads.
 */
class MeshDistanceIndex {
public:
    explicit MeshDistanceIndex(const TriangleMesh& mesh)
        : vertices_(mesh.vertices), faces_(mesh.faces) {
        if (faces_.empty()) throw ShapeError("MeshDistanceIndex: mesh has no faces");
        mesh.validate();
        order_.resize(faces_.size());
        std::iota(order_.begin(), order_.end(), 0);
        centroids_.reserve(faces_.size());
        for (const auto& f : faces_)
            centroids_.push_back((vertex(f[0]) + vertex(f[1]) + vertex(f[2])) / 3.0);
        nodes_.reserve(2 * faces_.size() / kLeafSize + 8);
        root_ = build(0, static_cast<int>(faces_.size()));
        centroids_.clear();
        centroids_.shrink_to_fit();
    }

    ClosestPointResult closest_point(const Vec3& p) const {
        ClosestPointResult best;
        best.point.face_index = std::numeric_limits<int>::max();
        search(root_, p, best);
        return best;
    }

    double distance(const Vec3& p) const { return std::sqrt(closest_point(p).squared_distance); }

private:
    static constexpr int kLeafSize = 8;

    struct Node {
        Vec3 box_min, box_max;
        int left = -1, right = -1;
        int begin = 0, end = 0;
    };

    const Vec3& vertex(int i) const { return vertices_[static_cast<std::size_t>(i)]; }

    int build(int begin, int end) {
        Node node;
        node.box_min = Vec3::Constant(std::numeric_limits<double>::infinity());
        node.box_max = Vec3::Constant(-std::numeric_limits<double>::infinity());
        for (int i = begin; i < end; ++i) {
            const auto& f = faces_[static_cast<std::size_t>(order_[static_cast<std::size_t>(i)])];
            for (int v : f) {
                node.box_min = node.box_min.cwiseMin(vertex(v));
                node.box_max = node.box_max.cwiseMax(vertex(v));
            }
        }
        const int node_id = static_cast<int>(nodes_.size());
        nodes_.push_back(node);

        if (end - begin <= kLeafSize) {
            nodes_[static_cast<std::size_t>(node_id)].begin = begin;
            nodes_[static_cast<std::size_t>(node_id)].end = end;
            return node_id;
        }

        int axis = 0;
        (node.box_max - node.box_min).maxCoeff(&axis);
        const int mid = begin + (end - begin) / 2;
        std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                         [&](int fa, int fb) {
                             return centroids_[static_cast<std::size_t>(fa)][axis] <
                                    centroids_[static_cast<std::size_t>(fb)][axis];
                         });
        const int left = build(begin, mid);
        const int right = build(mid, end);
        nodes_[static_cast<std::size_t>(node_id)].left = left;
        nodes_[static_cast<std::size_t>(node_id)].right = right;
        return node_id;
    }

    double box_dist2(const Node& node, const Vec3& q) const {
        double d2 = 0.0;
        for (int a = 0; a < 3; ++a) {
            double d = 0.0;
            if (q[a] < node.box_min[a]) d = node.box_min[a] - q[a];
            else if (q[a] > node.box_max[a]) d = q[a] - node.box_max[a];
            d2 += d * d;
        }
        return d2;
    }

    void search(int node_id, const Vec3& p, ClosestPointResult& best) const {
        const Node& node = nodes_[static_cast<std::size_t>(node_id)];
        // Strict pruning only: an equal-distance face with a lower index may
        // still be waiting in this subtree.
        if (box_dist2(node, p) > best.squared_distance) return;

        if (node.left < 0) {
            for (int i = node.begin; i < node.end; ++i) {
                const int face = order_[static_cast<std::size_t>(i)];
                const auto& f = faces_[static_cast<std::size_t>(face)];
                const auto tp = closest_point_on_triangle(p, vertex(f[0]), vertex(f[1]), vertex(f[2]));
                const double d2 = (p - tp.position).squaredNorm();
                if (d2 < best.squared_distance ||
                    (d2 == best.squared_distance && face < best.point.face_index)) {
                    best.squared_distance = d2;
                    best.point.position = tp.position;
                    best.point.barycentric = tp.barycentric;
                    best.point.face_index = face;
                }
            }
            return;
        }

        const double dl = box_dist2(nodes_[static_cast<std::size_t>(node.left)], p);
        const double dr = box_dist2(nodes_[static_cast<std::size_t>(node.right)], p);
        if (dl <= dr) {
            search(node.left, p, best);
            search(node.right, p, best);
        } else {
            search(node.right, p, best);
            search(node.left, p, best);
        }
    }

    std::vector<Vec3> vertices_;
    std::vector<std::array<int, 3>> faces_;
    std::vector<Vec3> centroids_;
    std::vector<int> order_;
    std::vector<Node> nodes_;
    int root_ = 0;
};

/// One-off closest-point query; builds a transient index. Use
/// MeshDistanceIndex directly for repeated queries against the same mesh.
inline SurfacePoint closest_point_on_mesh(const TriangleMesh& mesh, const Vec3& p) {
    return MeshDistanceIndex(mesh).closest_point(p).point;
}

/// Faces whose three vertices are all inside the mask; vertex array unchanged.
inline TriangleMesh submesh_by_vertex_mask(const TriangleMesh& mesh,
                                           const std::vector<std::uint8_t>& mask) {
    if (mask.size() != mesh.vertices.size())
        throw ShapeError("submesh_by_vertex_mask: mask cardinality mismatch");
    TriangleMesh out;
    out.vertices = mesh.vertices;
    for (const auto& f : mesh.faces)
        if (mask[static_cast<std::size_t>(f[0])] && mask[static_cast<std::size_t>(f[1])] &&
            mask[static_cast<std::size_t>(f[2])])
            out.faces.push_back(f);
    return out;
}

} // namespace morphfit
