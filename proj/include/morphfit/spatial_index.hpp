/*
 * morphfit - joint multi-scan alignment and 3D morphable face model fitting.
 *
 * File: include/morphfit/spatial_index.hpp
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
#include <numeric>
#include <vector>

namespace morphfit {

/**
 * Immutable KD-tree over a point set, answering exact k-nearest and radius
 * queries. Results are identical to a linear scan: distances compared on
 * squared norms, ties broken by the lowest point index. Safe to share across
 * threads once built.
 */
class SpatialIndex {
public:
    explicit SpatialIndex(std::vector<Vec3> points) : points_(std::move(points)) {
        if (points_.empty()) throw EmptyCloud("SpatialIndex: empty point set");
        for (const Vec3& p : points_)
            if (!is_finite(p)) throw InvalidArgument("SpatialIndex: non-finite point");
        order_.resize(points_.size());
        std::iota(order_.begin(), order_.end(), 0);
        nodes_.reserve(2 * points_.size() / kLeafSize + 8);
        root_ = build(0, static_cast<int>(points_.size()));
    }

    int size() const { return static_cast<int>(points_.size()); }
    const std::vector<Vec3>& points() const { return points_; }
    const Vec3& point(int i) const { return points_[static_cast<std::size_t>(i)]; }

    /**
     * Indices of the k points nearest to query, sorted ascending by distance,
     * ties by lowest index. Throws InsufficientPoints when k exceeds the
     * number of indexed points.
     */
    std::vector<int> k_nearest(const Vec3& query, int k) const {
        if (k < 1) throw InvalidArgument("k_nearest: k must be >= 1");
        if (k > size()) throw InsufficientPoints("k_nearest: k exceeds point count");

        std::vector<Entry> heap; // max-heap, worst candidate on top
        heap.reserve(static_cast<std::size_t>(k));
        search_knn(root_, query, k, heap);
        std::sort(heap.begin(), heap.end(), better);
        std::vector<int> out;
        out.reserve(heap.size());
        for (const Entry& e : heap) out.push_back(e.index);
        return out;
    }

    /// Indices of all points with distance <= radius, sorted ascending by index.
    std::vector<int> radius_indices(const Vec3& query, double radius) const {
        if (radius < 0.0) throw InvalidArgument("radius_indices: negative radius");
        std::vector<int> out;
        search_radius(root_, query, radius * radius, out);
        std::sort(out.begin(), out.end());
        return out;
    }

private:
    static constexpr int kLeafSize = 16;

    struct Entry {
        double dist2;
        int index;
    };

    // True when a is a strictly better candidate than b.
    static bool better(const Entry& a, const Entry& b) {
        return a.dist2 < b.dist2 || (a.dist2 == b.dist2 && a.index < b.index);
    }

    struct Node {
        Vec3 box_min, box_max;
        int left = -1, right = -1; // leaf when left < 0
        int begin = 0, end = 0;    // range into order_ (leaves only)
    };

    int build(int begin, int end) {
        Node node;
        node.box_min = Vec3::Constant(std::numeric_limits<double>::infinity());
        node.box_max = Vec3::Constant(-std::numeric_limits<double>::infinity());
        for (int i = begin; i < end; ++i) {
            const Vec3& p = points_[static_cast<std::size_t>(order_[static_cast<std::size_t>(i)])];
            node.box_min = node.box_min.cwiseMin(p);
            node.box_max = node.box_max.cwiseMax(p);
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
                         [&](int a, int b) {
                             return points_[static_cast<std::size_t>(a)][axis] <
                                    points_[static_cast<std::size_t>(b)][axis];
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

    void search_knn(int node_id, const Vec3& q, int k, std::vector<Entry>& heap) const {
        const Node& node = nodes_[static_cast<std::size_t>(node_id)];
        // Equal box distance may still hide an equal-distance, lower-index point,
        // so only prune on strictly greater.
        if (static_cast<int>(heap.size()) == k && box_dist2(node, q) > heap.front().dist2) return;

        if (node.left < 0) {
            for (int i = node.begin; i < node.end; ++i) {
                const int idx = order_[static_cast<std::size_t>(i)];
                const Entry cand{(points_[static_cast<std::size_t>(idx)] - q).squaredNorm(), idx};
                if (static_cast<int>(heap.size()) < k) {
                    heap.push_back(cand);
                    std::push_heap(heap.begin(), heap.end(), better);
                } else if (better(cand, heap.front())) {
                    std::pop_heap(heap.begin(), heap.end(), better);
                    heap.back() = cand;
                    std::push_heap(heap.begin(), heap.end(), better);
                }
            }
            return;
        }

        const double dl = box_dist2(nodes_[static_cast<std::size_t>(node.left)], q);
        const double dr = box_dist2(nodes_[static_cast<std::size_t>(node.right)], q);
        if (dl <= dr) {
            search_knn(node.left, q, k, heap);
            search_knn(node.right, q, k, heap);
        } else {
            search_knn(node.right, q, k, heap);
            search_knn(node.left, q, k, heap);
        }
    }

    void search_radius(int node_id, const Vec3& q, double r2, std::vector<int>& out) const {
        const Node& node = nodes_[static_cast<std::size_t>(node_id)];
        if (box_dist2(node, q) > r2) return;
        if (node.left < 0) {
            for (int i = node.begin; i < node.end; ++i) {
                const int idx = order_[static_cast<std::size_t>(i)];
                if ((points_[static_cast<std::size_t>(idx)] - q).squaredNorm() <= r2) out.push_back(idx);
            }
            return;
        }
        search_radius(node.left, q, r2, out);
        search_radius(node.right, q, r2, out);
    }

    std::vector<Vec3> points_;
    std::vector<int> order_;
    std::vector<Node> nodes_;
    int root_ = 0;
};

/// Spec-facing spelling for SpatialIndex construction.
inline SpatialIndex build_index(std::vector<Vec3> points) { return SpatialIndex(std::move(points)); }

/// Free-function spelling of SpatialIndex::k_nearest.
inline std::vector<int> k_nearest(const SpatialIndex& index, const Vec3& query, int k) {
    return index.k_nearest(query, k);
}

} // namespace morphfit
