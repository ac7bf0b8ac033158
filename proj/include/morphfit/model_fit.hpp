/*
 * morphfit - joint multi-scan alignment and 3D morphable face model fitting.
 *
 * File: include/morphfit/model_fit.hpp
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

#include "morphfit/morphable_model.hpp"
#include "morphfit/spatial_index.hpp"
#include "morphfit/triangle_mesh.hpp"

#include <Eigen/Dense>

#include <vector>

namespace morphfit {

/**
 * One scan's vertex displacements from the model mean. Rows where
 * validity == false are zero: the scan gave no usable evidence there
 * (hole or unobserved region).
 */
struct OffsetField {
    Eigen::Matrix<double, Eigen::Dynamic, 3> offsets; // V x 3, mm, relative to the mean
    std::vector<std::uint8_t> validity;

    int vertex_count() const { return static_cast<int>(offsets.rows()); }
};

/// Per-vertex mean of offset fields; weight counts contributing scans.
struct AggregateOffsets {
    Eigen::Matrix<double, Eigen::Dynamic, 3> mean_offsets; // V x 3
    std::vector<int> weight;                               // contributing scans per vertex

    int vertex_count() const { return static_cast<int>(mean_offsets.rows()); }
    int observed_count() const {
        int n = 0;
        for (int w : weight) n += w > 0 ? 1 : 0;
        return n;
    }
};

/**
 * Offset field of one aligned scan against the current mesh.
 *
 * Every scan point is paired with its closest point on the current surface.
 * For each template vertex, the three paired surface points nearest to the
 * vertex define the local evidence: the relative offset is their mean
 * scan-minus-surface displacement, and the vertex offset is that plus the
 * vertex's current displacement from the mean. A vertex whose three selected
 * surface points lie farther than hole_threshold on average gets no offset —
 * that keeps hole-spanning associations out of the solve.
 */
inline OffsetField compute_offset_field(const TriangleMesh& current_mesh,
                                        const PointCloudScan& scan, const MorphableModel& model,
                                        double hole_threshold_mm) {
    if (scan.points.size() < 3)
        throw InsufficientPoints("compute_offset_field: scan has fewer than 3 points");
    if (current_mesh.vertex_count() != model.vertex_count())
        throw ShapeError("compute_offset_field: mesh does not match model topology");

    const MeshDistanceIndex mesh_index(current_mesh);

    // Pair every scan point with its closest surface point.
    std::vector<Vec3> surface_points(scan.points.size());
    std::vector<Vec3> displacement(scan.points.size());
    for (std::size_t i = 0; i < scan.points.size(); ++i) {
        const SurfacePoint sp = mesh_index.closest_point(scan.points[i]).point;
        surface_points[i] = sp.position;
        displacement[i] = scan.points[i] - sp.position;
    }

    const SpatialIndex surface_index(surface_points);

    const int v_count = model.vertex_count();
    OffsetField field;
    field.offsets = Eigen::Matrix<double, Eigen::Dynamic, 3>::Zero(v_count, 3);
    field.validity.assign(static_cast<std::size_t>(v_count), 0);

    for (int v = 0; v < v_count; ++v) {
        const Vec3 vertex_pos = current_mesh.vertices[static_cast<std::size_t>(v)];
        const std::vector<int> nn = surface_index.k_nearest(vertex_pos, 3);

        double mean_dist = 0.0;
        Vec3 relative = Vec3::Zero();
        for (int j : nn) {
            mean_dist += (surface_points[static_cast<std::size_t>(j)] - vertex_pos).norm();
            relative += displacement[static_cast<std::size_t>(j)];
        }
        mean_dist /= 3.0;
        relative /= 3.0;

        if (mean_dist > hole_threshold_mm) continue;
        field.offsets.row(v) = (relative + (vertex_pos - model.mean_vertex(v))).transpose();
        field.validity[static_cast<std::size_t>(v)] = 1;
    }
    return field;
}

/// Per-vertex mean over the fields that observed the vertex.
inline AggregateOffsets aggregate_offsets(const std::vector<OffsetField>& fields) {
    if (fields.empty()) throw InvalidArgument("aggregate_offsets: no fields");
    const int v_count = fields.front().vertex_count();
    for (const OffsetField& f : fields)
        if (f.vertex_count() != v_count)
            throw ShapeError("aggregate_offsets: fields have mismatched cardinality");

    AggregateOffsets agg;
    agg.mean_offsets = Eigen::Matrix<double, Eigen::Dynamic, 3>::Zero(v_count, 3);
    agg.weight.assign(static_cast<std::size_t>(v_count), 0);

    for (const OffsetField& f : fields)
        for (int v = 0; v < v_count; ++v)
            if (f.validity[static_cast<std::size_t>(v)]) {
                agg.mean_offsets.row(v) += f.offsets.row(v);
                ++agg.weight[static_cast<std::size_t>(v)];
            }

    for (int v = 0; v < v_count; ++v)
        if (agg.weight[static_cast<std::size_t>(v)] > 0)
            agg.mean_offsets.row(v) /= static_cast<double>(agg.weight[static_cast<std::size_t>(v)]);
    return agg;
}

/**
 * Coefficients from the stacked system: each field contributes its valid
 * vertex rows as independent equations basis_rows * A = offset_rows, all with
 * equal weight. Memory and time grow with the number of fields; kept mainly
 * as the reference the faster weighted solve is checked against.
 */
inline ShapeCoefficients solve_coefficients_stacked(const std::vector<OffsetField>& fields,
                                                    const MorphableModel& model) {
    const int rank = model.rank();
    Eigen::Index rows = 0;
    for (const OffsetField& f : fields) {
        if (f.vertex_count() != model.vertex_count())
            throw ShapeError("solve_coefficients_stacked: field cardinality mismatch");
        for (std::uint8_t valid : f.validity) rows += valid ? 3 : 0;
    }
    if (rows < rank)
        throw RankDeficient("solve_coefficients_stacked: fewer valid rows than basis rank", 0);

    Eigen::MatrixXd system(rows, rank);
    Eigen::VectorXd rhs(rows);
    Eigen::Index r = 0;
    for (const OffsetField& f : fields)
        for (int v = 0; v < f.vertex_count(); ++v) {
            if (!f.validity[static_cast<std::size_t>(v)]) continue;
            for (int c = 0; c < 3; ++c) {
                system.row(r) = model.basis.row(3 * v + c);
                rhs(r) = f.offsets(v, c);
                ++r;
            }
        }

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(system);
    if (qr.rank() < rank)
        throw RankDeficient("solve_coefficients_stacked: rank-deficient system",
                            static_cast<int>(qr.rank()));
    return qr.solve(rhs);
}

/**
 * Coefficients from the weighted mean-offset system: each observed vertex's
 * three coordinate rows of the basis and of the mean offsets are scaled by
 * its weight (element-wise, not squared), unobserved rows dropped. Much
 * cheaper than the stacked solve — cost depends only on the mesh size — and
 * of comparable accuracy. An optional Tikhonov term regularization * |A|^2
 * stabilizes rank-deficient inputs.
 */
inline ShapeCoefficients solve_coefficients_weighted(const AggregateOffsets& agg,
                                                     const MorphableModel& model,
                                                     double regularization = 0.0) {
    const int rank = model.rank();
    if (agg.vertex_count() != model.vertex_count())
        throw ShapeError("solve_coefficients_weighted: aggregate cardinality mismatch");
    const int observed = agg.observed_count();
    if (3 * observed < rank)
        throw RankDeficient("solve_coefficients_weighted: too few observed vertices", 0);

    const Eigen::Index data_rows = 3 * static_cast<Eigen::Index>(observed);
    const Eigen::Index reg_rows = regularization > 0.0 ? rank : 0;
    Eigen::MatrixXd system(data_rows + reg_rows, rank);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(data_rows + reg_rows);

    Eigen::Index r = 0;
    for (int v = 0; v < agg.vertex_count(); ++v) {
        const double w = static_cast<double>(agg.weight[static_cast<std::size_t>(v)]);
        if (w <= 0.0) continue;
        for (int c = 0; c < 3; ++c) {
            system.row(r) = w * model.basis.row(3 * v + c);
            rhs(r) = w * agg.mean_offsets(v, c);
            ++r;
        }
    }
    if (reg_rows > 0)
        system.bottomRows(reg_rows) =
            std::sqrt(regularization) * Eigen::MatrixXd::Identity(rank, rank);

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(system);
    if (regularization <= 0.0 && qr.rank() < rank)
        throw RankDeficient("solve_coefficients_weighted: rank-deficient system",
                            static_cast<int>(qr.rank()));
    return qr.solve(rhs);
}

/**
 * Detail vector delta = mean offsets - basis * A on observed vertices, zero
 * elsewhere. Reconstructing with it places every observed vertex exactly at
 * mean + mean offset; unobserved vertices stay on the PCA estimate.
 */
inline DetailVector compute_detail(const AggregateOffsets& agg, const MorphableModel& model,
                                   const ShapeCoefficients& coeffs) {
    if (coeffs.size() != model.rank())
        throw ShapeError("compute_detail: coefficient length does not match basis rank");
    if (agg.vertex_count() != model.vertex_count())
        throw ShapeError("compute_detail: aggregate cardinality mismatch");

    const Eigen::VectorXd displacement = model.basis * coeffs;
    DetailVector detail = DetailVector::zero(model.vertex_count());
    for (int v = 0; v < model.vertex_count(); ++v) {
        if (agg.weight[static_cast<std::size_t>(v)] < 1) continue;
        for (int c = 0; c < 3; ++c)
            detail.delta(v, c) = agg.mean_offsets(v, c) - displacement(3 * v + c);
        detail.validity[static_cast<std::size_t>(v)] = 1;
    }
    return detail;
}

} // namespace morphfit
