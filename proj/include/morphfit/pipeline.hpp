/*
 * morphfit - joint multi-scan alignment and 3D morphable face model fitting.
 *
 * File: include/morphfit/pipeline.hpp
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

#include "morphfit/config.hpp"
#include "morphfit/icp.hpp"
#include "morphfit/model_fit.hpp"
#include "morphfit/morphable_model.hpp"
#include "morphfit/parallel.hpp"
#include "morphfit/pose_init.hpp"
#include "morphfit/preprocess.hpp"

#include <Eigen/Core>

#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace morphfit {

/// One scan's data as it flows through the pipeline (untransformed cloud).
struct ScanInput {
    PointCloudScan cloud;
    LandmarkSet landmarks;
    std::optional<Eigen::VectorXd> embedding;
};

struct ScanState {
    std::string scan_id;
    RigidTransform transform; // camera -> model space
    bool low_confidence = false;
    double mean_distance = 0.0;         // vs the subject's full mesh
    double mean_squared_distance = 0.0; // same statistic, squared (mm^2)
};

struct IterationStats {
    int iteration = 0;        // 1-based across all phases
    double mean_distance = 0.0; // mean over scans of per-scan mean distance
    double variance = 0.0;      // variance over scans of per-scan mean distance
};

/// All per-subject fitting state. error_history grows by one per iteration.
struct SubjectState {
    std::string subject_id;
    std::vector<ScanState> scans; // parallel to the subject's ScanInput list
    ShapeCoefficients coefficients;
    DetailVector detail;
    TriangleMesh current_mesh;
    std::vector<IterationStats> error_history;
};

/// One subject's inputs plus its evolving state.
struct SubjectWork {
    std::string subject_id;
    std::vector<ScanInput> inputs;
    SubjectState state;
};

struct RelabelRecord {
    std::string scan_id;
    std::string old_subject;
    std::string new_subject; // empty when the scan was excluded
    double error_before = 0.0;
    double error_after = 0.0;
};

struct PipelineReport {
    std::vector<RelabelRecord> relabels;
    std::vector<std::string> dropped_scan_ids;   // scans that failed a stage
    std::vector<std::string> excluded_subjects;  // subjects left with no scans
};

namespace pipeline_detail {

inline double mislabel_statistic(const ScanState& scan, const PhasePlan& plan) {
    return plan.mislabel_use_rms ? std::sqrt(scan.mean_squared_distance)
                                 : scan.mean_squared_distance;
}

inline IterationStats error_stats(int iteration, const std::vector<ScanState>& scans) {
    IterationStats stats;
    stats.iteration = iteration;
    if (scans.empty()) return stats;
    double sum = 0.0;
    for (const ScanState& s : scans) sum += s.mean_distance;
    stats.mean_distance = sum / static_cast<double>(scans.size());
    double var = 0.0;
    for (const ScanState& s : scans) {
        const double d = s.mean_distance - stats.mean_distance;
        var += d * d;
    }
    stats.variance = var / static_cast<double>(scans.size());
    return stats;
}

} // namespace pipeline_detail

/// Sets up a subject's state: identity transforms, the mean mesh as the
/// starting geometry, zero coefficients and detail.
inline SubjectState make_initial_state(const std::string& subject_id,
                                       const std::vector<ScanInput>& inputs,
                                       const MorphableModel& model) {
    SubjectState state;
    state.subject_id = subject_id;
    state.coefficients = ShapeCoefficients::Zero(model.rank());
    state.detail = DetailVector::zero(model.vertex_count());
    state.current_mesh = model.mean_mesh();
    for (const ScanInput& input : inputs) {
        ScanState s;
        s.scan_id = input.cloud.scan_id;
        state.scans.push_back(std::move(s));
    }
    return state;
}

/// Triplet pose initialization for every scan of a subject.
inline void init_subject_poses(SubjectWork& work, const MorphableModel& model,
                               const RunConfig& config) {
    for (std::size_t i = 0; i < work.inputs.size(); ++i) {
        PoseInitParams params = config.pose;
        params.rng_seed = derive_seed(config.seed, "pose-init", fnv1a(work.inputs[i].cloud.scan_id));
        const PoseInitResult result =
            init_pose_triplets(work.inputs[i].landmarks, model, work.inputs[i].cloud, params);
        work.state.scans[i].transform = result.transform;
        work.state.scans[i].low_confidence = result.low_confidence;
    }
}

/**
 * One refinement iteration for a subject: offset fields from its scans,
 * aggregate, solve the weighted system, optionally the detail vector,
 * reconstruct, then ICP-align every scan to the new mesh and record error
 * statistics against the full mesh.
 *
 * On the first iteration, scans tagged low-confidence contribute no offsets;
 * afterwards every scan participates. A scan that fails a stage is skipped
 * with a warning and never aborts the subject.
 */
inline void run_iteration(SubjectState& state, const std::vector<ScanInput>& inputs,
                          const MorphableModel& model, const RunConfig& config, bool use_detail,
                          int iteration) {
    if (inputs.size() != state.scans.size())
        throw ShapeError("run_iteration: inputs and state are out of step");

    const bool first_iteration = state.error_history.empty();

    // (a) offset fields from the aligned scans
    std::vector<OffsetField> fields;
    std::vector<char> field_ok(inputs.size(), 0);
    std::vector<OffsetField> per_scan(inputs.size());
    parallel_for(static_cast<int>(inputs.size()), config.jobs, [&](int i) {
        const auto idx = static_cast<std::size_t>(i);
        if (first_iteration && state.scans[idx].low_confidence) return;
        try {
            PointCloudScan aligned = inputs[idx].cloud;
            aligned.points = state.scans[idx].transform.apply(aligned.points);
            per_scan[idx] =
                compute_offset_field(state.current_mesh, aligned, model, config.hole_threshold_mm);
            field_ok[idx] = 1;
        } catch (const Error& e) {
            std::cerr << "warning: subject " << state.subject_id << " scan "
                      << state.scans[idx].scan_id << ": offsets failed: " << e.what() << "\n";
        }
    });
    for (std::size_t i = 0; i < inputs.size(); ++i)
        if (field_ok[i]) fields.push_back(std::move(per_scan[i]));

    // All scans low-confidence on iteration one: fall back to using them all,
    // otherwise there is nothing to fit.
    if (fields.empty() && first_iteration) {
        for (std::size_t i = 0; i < inputs.size(); ++i) {
            try {
                PointCloudScan aligned = inputs[i].cloud;
                aligned.points = state.scans[i].transform.apply(aligned.points);
                fields.push_back(
                    compute_offset_field(state.current_mesh, aligned, model, config.hole_threshold_mm));
            } catch (const Error&) {
            }
        }
    }
    if (fields.empty())
        throw InsufficientPoints("run_iteration: no usable offset fields for subject " +
                                 state.subject_id);

    // (b, c, d, e) aggregate, solve, detail, reconstruct
    const AggregateOffsets agg = aggregate_offsets(fields);
    state.coefficients = solve_coefficients_weighted(agg, model, config.regularization);
    if (use_detail) {
        state.detail = compute_detail(agg, model, state.coefficients);
        state.current_mesh = reconstruct(model, state.coefficients, &state.detail);
    } else {
        state.detail = DetailVector::zero(model.vertex_count());
        state.current_mesh = reconstruct(model, state.coefficients);
    }

    // (f) align every scan to the new mesh, (g) record error statistics
    const MeshDistanceIndex full_index(state.current_mesh);
    parallel_for(static_cast<int>(inputs.size()), config.jobs, [&](int i) {
        const auto idx = static_cast<std::size_t>(i);
        IcpParams params = config.icp;
        params.rng_seed = derive_seed(config.seed, "icp", fnv1a(state.scans[idx].scan_id),
                                      static_cast<std::uint64_t>(iteration));
        try {
            const AlignmentResult aligned =
                icp_align(inputs[idx].cloud, state.current_mesh, model.icp_crop_mask, params,
                          state.scans[idx].transform);
            if (aligned.converged || aligned.iterations_used > 0)
                state.scans[idx].transform = aligned.transform;
        } catch (const Error& e) {
            std::cerr << "warning: subject " << state.subject_id << " scan "
                      << state.scans[idx].scan_id << ": ICP failed: " << e.what() << "\n";
        }
        const auto [mean, mean_sq] =
            point_to_mesh_error(state.scans[idx].transform.apply(inputs[idx].cloud.points), full_index);
        state.scans[idx].mean_distance = mean;
        state.scans[idx].mean_squared_distance = mean_sq;
    });

    state.error_history.push_back(pipeline_detail::error_stats(iteration, state.scans));
}

/// Scans whose error statistic against their subject's mesh exceeds the gate.
struct FlaggedScan {
    std::size_t subject_index;
    std::size_t scan_index;
    double statistic;
};

inline std::vector<FlaggedScan> detect_mislabeled(const std::vector<SubjectWork>& works,
                                                  const PhasePlan& plan) {
    std::vector<FlaggedScan> flagged;
    for (std::size_t s = 0; s < works.size(); ++s)
        for (std::size_t i = 0; i < works[s].state.scans.size(); ++i) {
            const double stat = pipeline_detail::mislabel_statistic(works[s].state.scans[i], plan);
            if (stat > plan.mislabel_threshold) flagged.push_back({s, i, stat});
        }
    return flagged;
}

namespace pipeline_detail {

/// Mean of the member scans' embeddings, renormalized; nullopt when any
/// member lacks one.
inline std::optional<Eigen::VectorXd> subject_mean_embedding(const SubjectWork& work) {
    if (work.inputs.empty()) return std::nullopt;
    Eigen::VectorXd sum;
    for (const ScanInput& input : work.inputs) {
        if (!input.embedding) return std::nullopt;
        if (sum.size() == 0) sum = Eigen::VectorXd::Zero(input.embedding->size());
        if (input.embedding->size() != sum.size()) return std::nullopt;
        sum += *input.embedding;
    }
    const double norm = sum.norm();
    if (norm < 1e-12) return std::nullopt;
    return Eigen::VectorXd(sum / norm);
}

} // namespace pipeline_detail

/**
 * Relabels flagged scans. Flagged scans are first pulled out of their
 * subjects; each is then matched against candidate subjects — ordered by
 * cosine distance of its identity embedding to the subjects' mean embeddings
 * when every scan carries one, otherwise by ascending post-ICP error — and
 * the first hypothesis whose ICP-verified error statistic passes the
 * mislabel gate is accepted. Scans passing nowhere are excluded entirely.
 */
inline std::vector<RelabelRecord> relabel_scans(std::vector<SubjectWork>& works,
                                                const std::vector<FlaggedScan>& flagged,
                                                const MorphableModel& model, const RunConfig& config) {
    std::vector<RelabelRecord> records;
    if (flagged.empty()) return records;

    // Detach flagged scans (descending scan index within each subject keeps
    // the remaining indices stable).
    struct Detached {
        ScanInput input;
        std::string old_subject;
        double error_before;
    };
    std::vector<Detached> detached;
    std::vector<FlaggedScan> ordered = flagged;
    std::sort(ordered.begin(), ordered.end(), [](const FlaggedScan& a, const FlaggedScan& b) {
        return a.subject_index != b.subject_index ? a.subject_index < b.subject_index
                                                  : a.scan_index > b.scan_index;
    });
    for (const FlaggedScan& f : ordered) {
        SubjectWork& work = works[f.subject_index];
        detached.push_back({std::move(work.inputs[f.scan_index]), work.subject_id, f.statistic});
        work.inputs.erase(work.inputs.begin() + static_cast<std::ptrdiff_t>(f.scan_index));
        work.state.scans.erase(work.state.scans.begin() + static_cast<std::ptrdiff_t>(f.scan_index));
    }
    // Deterministic processing order by scan id.
    std::sort(detached.begin(), detached.end(),
              [](const Detached& a, const Detached& b) { return a.input.cloud.scan_id < b.input.cloud.scan_id; });

    // Subject mean embeddings from the scans that remain.
    const bool embeddings_available = [&] {
        for (const Detached& d : detached)
            if (!d.input.embedding) return false;
        for (const SubjectWork& w : works)
            if (!pipeline_detail::subject_mean_embedding(w)) return false;
        return !works.empty();
    }();
    std::vector<Eigen::VectorXd> mean_embeddings;
    if (embeddings_available)
        for (const SubjectWork& w : works)
            mean_embeddings.push_back(*pipeline_detail::subject_mean_embedding(w));

    for (const Detached& d : detached) {
        struct Hypothesis {
            std::size_t subject_index;
            RigidTransform transform;
            double statistic;
            double mean_distance;
            double mean_squared;
        };

        // Verify one candidate subject by ICP + full-mesh statistics.
        auto evaluate = [&](std::size_t s) {
            IcpParams params = config.icp;
            params.rng_seed = derive_seed(config.seed, "relabel-icp", fnv1a(d.input.cloud.scan_id),
                                          static_cast<std::uint64_t>(s));
            Hypothesis h;
            h.subject_index = s;
            const AlignmentResult aligned = icp_align(d.input.cloud, works[s].state.current_mesh,
                                                      model.icp_crop_mask, params, RigidTransform{});
            h.transform = aligned.transform;
            const auto [mean, mean_sq] = point_to_mesh_error(
                h.transform.apply(d.input.cloud.points), MeshDistanceIndex(works[s].state.current_mesh));
            h.mean_distance = mean;
            h.mean_squared = mean_sq;
            h.statistic = config.plan.mislabel_use_rms ? std::sqrt(mean_sq) : mean_sq;
            return h;
        };

        std::optional<Hypothesis> accepted;
        if (embeddings_available) {
            // K-nearest-neighbor over mean subject embeddings, nearest first.
            std::vector<std::pair<double, std::size_t>> order;
            for (std::size_t s = 0; s < works.size(); ++s)
                order.push_back({1.0 - d.input.embedding->dot(mean_embeddings[s]), s});
            std::stable_sort(order.begin(), order.end(),
                             [](const auto& a, const auto& b) { return a.first < b.first; });
            for (const auto& [dist, s] : order) {
                const Hypothesis h = evaluate(s);
                if (h.statistic <= config.plan.mislabel_threshold) {
                    accepted = h;
                    break;
                }
            }
        } else {
            // Geometric fallback: every candidate, best post-ICP error first.
            std::vector<Hypothesis> all;
            for (std::size_t s = 0; s < works.size(); ++s) all.push_back(evaluate(s));
            std::stable_sort(all.begin(), all.end(), [](const Hypothesis& a, const Hypothesis& b) {
                return a.statistic < b.statistic;
            });
            if (!all.empty() && all.front().statistic <= config.plan.mislabel_threshold)
                accepted = all.front();
        }

        RelabelRecord record;
        record.scan_id = d.input.cloud.scan_id;
        record.old_subject = d.old_subject;
        record.error_before = d.error_before;
        if (accepted) {
            SubjectWork& target = works[accepted->subject_index];
            record.new_subject = target.subject_id;
            record.error_after = accepted->statistic;
            ScanInput input = d.input;
            input.cloud.subject_label = target.subject_id;
            ScanState scan_state;
            scan_state.scan_id = input.cloud.scan_id;
            scan_state.transform = accepted->transform;
            scan_state.mean_distance = accepted->mean_distance;
            scan_state.mean_squared_distance = accepted->mean_squared;
            target.inputs.push_back(std::move(input));
            target.state.scans.push_back(std::move(scan_state));
        } else {
            record.error_after = std::numeric_limits<double>::quiet_NaN();
        }
        records.push_back(std::move(record));
    }
    return records;
}

/**
 * The full three-phase schedule over all subjects: Phase I iterations without
 * the detail vector, Phase II with it, mislabel detection and relabeling,
 * then one final geometry estimate and alignment (Phase III). Subjects run
 * concurrently; relabeling is a global sequential step.
 */
inline PipelineReport run_pipeline(std::vector<SubjectWork>& works, const MorphableModel& model,
                                   const RunConfig& config) {
    config.validate();
    PipelineReport report;

    auto iterate_all = [&](bool use_detail, int iteration) {
        parallel_for(static_cast<int>(works.size()), config.jobs, [&](int s) {
            auto& work = works[static_cast<std::size_t>(s)];
            if (work.inputs.empty()) return;
            run_iteration(work.state, work.inputs, model, config, use_detail, iteration);
        });
    };

    int iteration = 0;
    for (int i = 0; i < config.plan.phase1_iters; ++i) iterate_all(false, ++iteration);
    for (int i = 0; i < config.plan.phase2_iters; ++i)
        iterate_all(config.plan.use_detail_in_phase2, ++iteration);

    const std::vector<FlaggedScan> flagged = detect_mislabeled(works, config.plan);
    report.relabels = relabel_scans(works, flagged, model, config);

    iterate_all(config.plan.use_detail_in_phase2, ++iteration); // Phase III

    for (const SubjectWork& work : works)
        if (work.inputs.empty()) report.excluded_subjects.push_back(work.subject_id);
    return report;
}

} // namespace morphfit
