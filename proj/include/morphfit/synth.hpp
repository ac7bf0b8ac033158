/*
 * morphfit - joint multi-scan alignment and 3D morphable face model fitting.
 *
 * File: include/morphfit/synth.hpp
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
#include "morphfit/random.hpp"
#include "morphfit/rigid_transform.hpp"
#include "morphfit/types.hpp"

#include <json.hpp>

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include <cmath>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace morphfit::synth {

/**
 * Parameters of the synthetic benchmark generator. Everything is seeded and
 * deterministic; the ground truth emitted alongside a dataset is sufficient
 * to score pose, coefficient and relabeling accuracy without regeneration.
 */
struct SynthSpec {
    int vertex_count = 2500;      // grid is sized to the closest gu x gv product
    int basis_rank = 12;
    int subject_count = 10;
    int scans_per_subject = 10;
    int points_per_scan = 3500;
    double yaw_range_deg = 90.0;  // scan viewpoint and scrambling rotation range
    double pitch_range_deg = 45.0;
    double cone_half_angle_deg = 90.0;
    double noise_sigma_mm = 0.0;
    double landmark_noise_mm = 0.5;
    double swap_fraction = 0.0;   // fraction of scans with a planted wrong label
    int embedding_dim = 0;        // 0 disables embedding emission
    double embedding_noise = 0.1;
    double min_subject_separation_mm = 3.0; // mean inter-subject surface delta
    std::uint64_t seed = 0;

    void validate() const {
        if (vertex_count < 16 || basis_rank < 1 || subject_count < 1 || scans_per_subject < 1 ||
            points_per_scan < 10)
            throw InvalidArgument("SynthSpec: sizes must be positive");
        if (swap_fraction < 0.0 || swap_fraction >= 0.5)
            throw InvalidArgument("SynthSpec: swap_fraction must be in [0, 0.5)");
        if (noise_sigma_mm < 0.0 || landmark_noise_mm < 0.0)
            throw InvalidArgument("SynthSpec: noise levels must be non-negative");
        if (3 * vertex_count < basis_rank)
            throw InvalidArgument("SynthSpec: basis rank exceeds geometry dimension");
    }
};

inline SynthSpec synth_spec_from_json(nlohmann::json j) {
    SynthSpec spec;
    auto take = [&j](const char* key, auto& out) {
        const auto it = j.find(key);
        if (it == j.end()) return;
        try {
            out = it->template get<std::decay_t<decltype(out)>>();
        } catch (const nlohmann::json::exception&) {
            throw ConfigError(std::string("synth spec: key '") + key + "' has the wrong type");
        }
        j.erase(it);
    };
    take("vertex_count", spec.vertex_count);
    take("basis_rank", spec.basis_rank);
    take("subject_count", spec.subject_count);
    take("scans_per_subject", spec.scans_per_subject);
    take("points_per_scan", spec.points_per_scan);
    take("yaw_range_deg", spec.yaw_range_deg);
    take("pitch_range_deg", spec.pitch_range_deg);
    take("cone_half_angle_deg", spec.cone_half_angle_deg);
    take("noise_sigma_mm", spec.noise_sigma_mm);
    take("landmark_noise_mm", spec.landmark_noise_mm);
    take("swap_fraction", spec.swap_fraction);
    take("embedding_dim", spec.embedding_dim);
    take("embedding_noise", spec.embedding_noise);
    take("min_subject_separation_mm", spec.min_subject_separation_mm);
    take("seed", spec.seed);
    if (!j.empty()) throw ConfigError("synth spec: unknown key '" + j.begin().key() + "'");
    spec.validate();
    return spec;
}

inline nlohmann::json synth_spec_to_json(const SynthSpec& s) {
    nlohmann::json j;
    j["vertex_count"] = s.vertex_count;
    j["basis_rank"] = s.basis_rank;
    j["subject_count"] = s.subject_count;
    j["scans_per_subject"] = s.scans_per_subject;
    j["points_per_scan"] = s.points_per_scan;
    j["yaw_range_deg"] = s.yaw_range_deg;
    j["pitch_range_deg"] = s.pitch_range_deg;
    j["cone_half_angle_deg"] = s.cone_half_angle_deg;
    j["noise_sigma_mm"] = s.noise_sigma_mm;
    j["landmark_noise_mm"] = s.landmark_noise_mm;
    j["swap_fraction"] = s.swap_fraction;
    j["embedding_dim"] = s.embedding_dim;
    j["embedding_noise"] = s.embedding_noise;
    j["min_subject_separation_mm"] = s.min_subject_separation_mm;
    j["seed"] = s.seed;
    return j;
}

namespace detail {

/// Head-like base surface: an ellipsoid patch with a nose bump and a chin,
/// parameterized on (u, v) in [-1, 1]^2, facing +z.
inline Vec3 base_surface(double u, double v) {
    const double yaw = u * deg_to_rad(78.0);
    const double pitch = v * deg_to_rad(58.0);
    double radial = 1.0;
    radial += 0.13 * std::exp(-((u * u) / (0.18 * 0.18) + (v + 0.22) * (v + 0.22) / (0.20 * 0.20)));
    radial += 0.05 * std::exp(-((u * u) / (0.22 * 0.22) + (v + 0.78) * (v + 0.78) / (0.18 * 0.18)));
    radial -= 0.03 * std::exp(-((u * u) / (0.65 * 0.65) + (v - 0.62) * (v - 0.62) / (0.30 * 0.30)));
    const Vec3 unit(std::sin(yaw) * std::cos(pitch), std::sin(pitch), std::cos(yaw) * std::cos(pitch));
    return Vec3(85.0 * unit.x() * radial, 110.0 * unit.y() * radial, 95.0 * unit.z() * radial);
}

struct GridDims {
    int gu, gv;
};

inline GridDims grid_dims(int vertex_count) {
    const int gu = std::max(4, static_cast<int>(std::lround(std::sqrt(static_cast<double>(vertex_count)))));
    const int gv = std::max(4, (vertex_count + gu - 1) / gu);
    return {gu, gv};
}

} // namespace detail

/**
 * Deterministic synthetic morphable model: a smooth head-like mean surface on
 * a gu x gv grid, an orthogonalized basis of smooth displacement fields with
 * a decaying spectrum, landmarks at extremal features and a central ICP crop
 * mask. The actual vertex count is the closest grid product to the request.
 */
inline MorphableModel generate_model(const SynthSpec& spec) {
    spec.validate();
    const auto [gu, gv] = detail::grid_dims(spec.vertex_count);
    const int v_count = gu * gv;

    MorphableModel model;
    model.mean_vertices.resize(v_count, 3);
    std::vector<double> us(static_cast<std::size_t>(v_count)), vs(static_cast<std::size_t>(v_count));
    for (int r = 0; r < gv; ++r)
        for (int c = 0; c < gu; ++c) {
            const int idx = r * gu + c;
            const double u = -1.0 + 2.0 * c / (gu - 1);
            const double v = -1.0 + 2.0 * r / (gv - 1);
            us[static_cast<std::size_t>(idx)] = u;
            vs[static_cast<std::size_t>(idx)] = v;
            model.mean_vertices.row(idx) = detail::base_surface(u, v).transpose();
        }

    // Faces wound so normals point away from the ellipsoid center.
    for (int r = 0; r + 1 < gv; ++r)
        for (int c = 0; c + 1 < gu; ++c) {
            const int v00 = r * gu + c, v01 = r * gu + c + 1;
            const int v10 = (r + 1) * gu + c, v11 = (r + 1) * gu + c + 1;
            for (std::array<int, 3> f : {std::array<int, 3>{v00, v01, v10},
                                         std::array<int, 3>{v01, v11, v10}}) {
                const Vec3 a = model.mean_vertices.row(f[0]).transpose();
                const Vec3 b = model.mean_vertices.row(f[1]).transpose();
                const Vec3 cc = model.mean_vertices.row(f[2]).transpose();
                const Vec3 n = (b - a).cross(cc - a);
                if (n.dot((a + b + cc) / 3.0) < 0.0) std::swap(f[1], f[2]);
                model.faces.push_back(f);
            }
        }

    // Smooth random displacement fields along the radial direction,
    // orthogonalized and scaled with a decaying spectrum.
    std::mt19937_64 rng(derive_seed(spec.seed, "model-basis"));
    std::uniform_real_distribution<double> freq(0.5, 3.5);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * kPi);
    std::normal_distribution<double> gauss(0.0, 1.0);

    Eigen::MatrixXd raw(3 * v_count, spec.basis_rank);
    for (int k = 0; k < spec.basis_rank; ++k) {
        const double fu1 = freq(rng), fv1 = freq(rng), p1 = phase(rng), q1 = phase(rng);
        const double fu2 = freq(rng), fv2 = freq(rng), p2 = phase(rng), q2 = phase(rng);
        const double mix = 0.35 * gauss(rng);
        for (int i = 0; i < v_count; ++i) {
            const double u = us[static_cast<std::size_t>(i)];
            const double v = vs[static_cast<std::size_t>(i)];
            const double g = std::cos(fu1 * kPi * u + p1) * std::cos(fv1 * kPi * v + q1) +
                             mix * std::sin(fu2 * kPi * u + p2) * std::sin(fv2 * kPi * v + q2);
            const Vec3 dir = Vec3(model.mean_vertices.row(i)).normalized();
            raw.block<3, 1>(3 * i, k) = g * dir;
        }
    }
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(raw);
    Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(3 * v_count, spec.basis_rank);
    model.basis.resize(3 * v_count, spec.basis_rank);
    const double base_scale = 2.5 * std::sqrt(static_cast<double>(3 * v_count));
    for (int k = 0; k < spec.basis_rank; ++k)
        model.basis.col(k) = q.col(k) * (base_scale / std::pow(1.0 + k, 0.6));

    // Landmarks at fixed parametric spots (nose tip, chin, forehead, eyes, cheeks).
    const std::vector<std::pair<std::string, std::pair<double, double>>> landmark_uv = {
        {"nose_tip", {0.0, -0.22}},    {"nose_bridge", {0.0, 0.08}},
        {"chin", {0.0, -0.78}},        {"forehead", {0.0, 0.62}},
        {"left_eye_outer", {-0.42, 0.14}}, {"right_eye_outer", {0.42, 0.14}},
        {"left_cheek", {-0.56, -0.30}},    {"right_cheek", {0.56, -0.30}},
    };
    for (const auto& [name, uv] : landmark_uv) {
        const int c = static_cast<int>(std::lround((uv.first + 1.0) / 2.0 * (gu - 1)));
        const int r = static_cast<int>(std::lround((uv.second + 1.0) / 2.0 * (gv - 1)));
        model.landmark_indices[name] = r * gu + c;
    }

    // Central crop: drop the lateral and lower boundary (ear / neck analog).
    model.icp_crop_mask.assign(static_cast<std::size_t>(v_count), 0);
    for (int i = 0; i < v_count; ++i)
        if (std::abs(us[static_cast<std::size_t>(i)]) <= 0.72 &&
            vs[static_cast<std::size_t>(i)] >= -0.82 && vs[static_cast<std::size_t>(i)] <= 0.85)
            model.icp_crop_mask[static_cast<std::size_t>(i)] = 1;

    model.validate();
    return model;
}

/// Ground truth for one generated scan.
struct ScanTruth {
    std::string scan_id;
    std::string true_subject;
    std::string labeled_subject;
    RigidTransform alignment; // camera -> model space (the pose the pipeline must recover)
};

struct SubjectTruth {
    std::string subject_id;
    ShapeCoefficients coefficients;
};

struct GeneratedScan {
    PointCloudScan cloud; // camera space
    LandmarkSet landmarks;
    std::optional<Eigen::VectorXd> embedding;
    ScanTruth truth;
};

struct SynthDataset {
    MorphableModel model;
    std::vector<SubjectTruth> subjects;
    std::vector<GeneratedScan> scans;
    std::vector<std::string> swapped_scan_ids;
};

namespace detail {

inline std::vector<Vec3> vertex_normals(const TriangleMesh& mesh) {
    std::vector<Vec3> normals(mesh.vertices.size(), Vec3::Zero());
    for (const auto& f : mesh.faces) {
        const Vec3& a = mesh.vertices[static_cast<std::size_t>(f[0])];
        const Vec3& b = mesh.vertices[static_cast<std::size_t>(f[1])];
        const Vec3& c = mesh.vertices[static_cast<std::size_t>(f[2])];
        const Vec3 n = (b - a).cross(c - a); // area weighted
        for (int v : f) normals[static_cast<std::size_t>(v)] += n;
    }
    for (Vec3& n : normals) {
        const double len = n.norm();
        if (len > 1e-12) n /= len;
    }
    return normals;
}

inline Eigen::Matrix3d yaw_pitch_rotation(double yaw_rad, double pitch_rad) {
    return (Eigen::AngleAxisd(yaw_rad, Vec3::UnitY()) * Eigen::AngleAxisd(pitch_rad, Vec3::UnitX()))
        .toRotationMatrix();
}

} // namespace detail

/**
 * Generates every subject's scans with full ground truth. Each scan samples
 * the subject's surface inside a visibility cone (surface normal facing the
 * viewpoint), adds Gaussian noise, and is scrambled by a random rigid
 * transform whose inverse is recorded as the true alignment. Landmark files
 * carry the true landmark positions plus noise; embeddings, when enabled,
 * are per-subject unit vectors plus per-scan noise, renormalized, and follow
 * the scan's true identity rather than its (possibly swapped) label.
 */
inline SynthDataset generate_dataset(const SynthSpec& spec) {
    spec.validate();
    SynthDataset data;
    data.model = generate_model(spec);
    const int v_count = data.model.vertex_count();

    // Subject coefficients, redrawn until all pairs are separated enough.
    std::vector<Eigen::Matrix<double, Eigen::Dynamic, 3>> subject_vertices;
    for (int s = 0; s < spec.subject_count; ++s) {
        SubjectTruth subject;
        subject.subject_id = "subj" + std::string(s < 10 ? "0" : "") + std::to_string(s);
        for (int attempt = 0;; ++attempt) {
            std::mt19937_64 rng(derive_seed(spec.seed, "subject-coeffs", static_cast<std::uint64_t>(s),
                                            static_cast<std::uint64_t>(attempt)));
            std::normal_distribution<double> gauss(0.0, 1.0);
            subject.coefficients = ShapeCoefficients(spec.basis_rank);
            for (int k = 0; k < spec.basis_rank; ++k) subject.coefficients(k) = gauss(rng);

            const Eigen::VectorXd disp = data.model.basis * subject.coefficients;
            Eigen::Matrix<double, Eigen::Dynamic, 3> verts = data.model.mean_vertices;
            for (int v = 0; v < v_count; ++v)
                verts.row(v) += Eigen::RowVector3d(disp(3 * v), disp(3 * v + 1), disp(3 * v + 2));

            double min_sep = std::numeric_limits<double>::infinity();
            for (const auto& other : subject_vertices)
                min_sep = std::min(min_sep, (verts - other).rowwise().norm().mean());
            if (min_sep >= spec.min_subject_separation_mm || attempt >= 64) {
                subject_vertices.push_back(std::move(verts));
                break;
            }
        }
        data.subjects.push_back(std::move(subject));
    }

    const std::int64_t total_scans =
        static_cast<std::int64_t>(spec.subject_count) * spec.scans_per_subject;

    // Planted label swaps, chosen over the whole dataset.
    std::vector<int> swap_flags(static_cast<std::size_t>(total_scans), 0);
    const int swap_count = static_cast<int>(std::floor(spec.swap_fraction * static_cast<double>(total_scans)));
    if (swap_count > 0) {
        std::mt19937_64 rng(derive_seed(spec.seed, "swaps"));
        const std::vector<int> chosen =
            sample_without_replacement(static_cast<int>(total_scans), swap_count, rng);
        for (int idx : chosen) swap_flags[static_cast<std::size_t>(idx)] = 1;
    }

    // Per-true-subject embedding anchors.
    std::vector<Eigen::VectorXd> subject_embeddings;
    if (spec.embedding_dim > 0) {
        for (int s = 0; s < spec.subject_count; ++s) {
            std::mt19937_64 rng(derive_seed(spec.seed, "subject-embedding", static_cast<std::uint64_t>(s)));
            std::normal_distribution<double> gauss(0.0, 1.0);
            Eigen::VectorXd e(spec.embedding_dim);
            for (int i = 0; i < spec.embedding_dim; ++i) e(i) = gauss(rng);
            e.normalize();
            subject_embeddings.push_back(std::move(e));
        }
    }

    const LandmarkSet model_landmarks = data.model.mean_landmark_positions();
    (void)model_landmarks;

    for (int s = 0; s < spec.subject_count; ++s) {
        TriangleMesh subject_mesh;
        subject_mesh.faces = data.model.faces;
        subject_mesh.vertices.resize(static_cast<std::size_t>(v_count));
        for (int v = 0; v < v_count; ++v)
            subject_mesh.vertices[static_cast<std::size_t>(v)] =
                subject_vertices[static_cast<std::size_t>(s)].row(v).transpose();
        const std::vector<Vec3> normals = detail::vertex_normals(subject_mesh);

        // Cumulative face areas with face normals for visibility culling.
        std::vector<double> cumulative;
        std::vector<Vec3> face_normals;
        double total_area = 0.0;
        for (const auto& f : subject_mesh.faces) {
            const Vec3& a = subject_mesh.vertices[static_cast<std::size_t>(f[0])];
            const Vec3& b = subject_mesh.vertices[static_cast<std::size_t>(f[1])];
            const Vec3& c = subject_mesh.vertices[static_cast<std::size_t>(f[2])];
            const Vec3 n = (b - a).cross(c - a);
            total_area += 0.5 * n.norm();
            cumulative.push_back(total_area);
            face_normals.push_back(n.normalized());
        }
        Vec3 mesh_centroid = Vec3::Zero();
        for (const Vec3& p : subject_mesh.vertices) mesh_centroid += p;
        mesh_centroid /= static_cast<double>(subject_mesh.vertices.size());

        for (int j = 0; j < spec.scans_per_subject; ++j) {
            const std::int64_t global_index = static_cast<std::int64_t>(s) * spec.scans_per_subject + j;
            std::mt19937_64 rng(derive_seed(spec.seed, "scan", static_cast<std::uint64_t>(s),
                                            static_cast<std::uint64_t>(j)));
            std::uniform_real_distribution<double> unit(0.0, 1.0);
            std::normal_distribution<double> gauss(0.0, 1.0);

            const double yaw = deg_to_rad(spec.yaw_range_deg) * (2.0 * unit(rng) - 1.0);
            const double pitch = deg_to_rad(spec.pitch_range_deg) * (2.0 * unit(rng) - 1.0);
            const Vec3 view_dir(std::sin(yaw) * std::cos(pitch), std::sin(pitch),
                                std::cos(yaw) * std::cos(pitch));
            const double cone_cos = std::cos(deg_to_rad(spec.cone_half_angle_deg));

            GeneratedScan scan;
            scan.truth.scan_id = data.subjects[static_cast<std::size_t>(s)].subject_id + "_r" +
                                 std::string(j < 10 ? "0" : "") + std::to_string(j);
            scan.truth.true_subject = data.subjects[static_cast<std::size_t>(s)].subject_id;
            scan.cloud.scan_id = scan.truth.scan_id;

            // Visible surface samples (area-weighted, normal facing the view,
            // direction from the centroid inside the cone).
            std::vector<Vec3> samples;
            samples.reserve(static_cast<std::size_t>(spec.points_per_scan));
            const long long max_attempts = 40LL * spec.points_per_scan;
            for (long long attempt = 0;
                 attempt < max_attempts && static_cast<int>(samples.size()) < spec.points_per_scan;
                 ++attempt) {
                const double r = unit(rng) * total_area;
                const auto it = std::lower_bound(cumulative.begin(), cumulative.end(), r);
                const std::size_t fi = std::min(static_cast<std::size_t>(it - cumulative.begin()),
                                                cumulative.size() - 1);
                if (face_normals[fi].dot(view_dir) <= 0.0) continue;
                const auto& f = subject_mesh.faces[fi];
                double u = unit(rng), w = unit(rng);
                if (u + w > 1.0) {
                    u = 1.0 - u;
                    w = 1.0 - w;
                }
                const Vec3 p = subject_mesh.vertices[static_cast<std::size_t>(f[0])] * (1.0 - u - w) +
                               subject_mesh.vertices[static_cast<std::size_t>(f[1])] * u +
                               subject_mesh.vertices[static_cast<std::size_t>(f[2])] * w;
                if ((p - mesh_centroid).normalized().dot(view_dir) < cone_cos) continue;
                samples.push_back(p);
            }

            // Scrambling pose; its inverse is the alignment the pipeline recovers.
            const double pose_yaw = deg_to_rad(spec.yaw_range_deg) * (2.0 * unit(rng) - 1.0);
            const double pose_pitch = deg_to_rad(spec.pitch_range_deg) * (2.0 * unit(rng) - 1.0);
            RigidTransform scramble;
            scramble.rotation = detail::yaw_pitch_rotation(pose_yaw, pose_pitch);
            scramble.translation =
                Vec3(200.0 * (unit(rng) - 0.5), 200.0 * (unit(rng) - 0.5), 200.0 * (unit(rng) - 0.5));
            scan.truth.alignment = scramble.inverse();

            scan.cloud.points.reserve(samples.size());
            for (Vec3 p : samples) {
                if (spec.noise_sigma_mm > 0.0)
                    p += spec.noise_sigma_mm * Vec3(gauss(rng), gauss(rng), gauss(rng));
                scan.cloud.points.push_back(scramble.apply(p));
            }

            // Landmarks visible from this viewpoint, in camera space, plus noise.
            std::vector<std::pair<double, std::pair<std::string, Vec3>>> candidates;
            for (const auto& [name, idx] : data.model.landmark_indices) {
                const Vec3 pos = subject_mesh.vertices[static_cast<std::size_t>(idx)];
                const double facing = normals[static_cast<std::size_t>(idx)].dot(view_dir);
                candidates.push_back({facing, {name, pos}});
            }
            std::stable_sort(candidates.begin(), candidates.end(),
                             [](const auto& a, const auto& b) { return a.first > b.first; });
            int taken = 0;
            for (const auto& [facing, named] : candidates) {
                if (taken >= 3 && facing <= 0.05) break;
                Vec3 p = scramble.apply(named.second);
                if (spec.landmark_noise_mm > 0.0)
                    p += spec.landmark_noise_mm * Vec3(gauss(rng), gauss(rng), gauss(rng));
                scan.landmarks[named.first] = p;
                ++taken;
            }

            // Label: usually the true subject, swapped for planted errors.
            std::string labeled = scan.truth.true_subject;
            if (swap_flags[static_cast<std::size_t>(global_index)] && spec.subject_count > 1) {
                std::mt19937_64 swap_rng(derive_seed(spec.seed, "swap-target",
                                                     static_cast<std::uint64_t>(global_index)));
                int other = static_cast<int>(swap_rng() % static_cast<std::uint64_t>(spec.subject_count - 1));
                if (other >= s) ++other;
                labeled = data.subjects[static_cast<std::size_t>(other)].subject_id;
                data.swapped_scan_ids.push_back(scan.truth.scan_id);
            }
            scan.truth.labeled_subject = labeled;
            scan.cloud.subject_label = labeled;

            if (spec.embedding_dim > 0) {
                Eigen::VectorXd e = subject_embeddings[static_cast<std::size_t>(s)];
                for (int i = 0; i < spec.embedding_dim; ++i) e(i) += spec.embedding_noise * gauss(rng);
                e.normalize();
                scan.embedding = std::move(e);
            }

            data.scans.push_back(std::move(scan));
        }
    }

    return data;
}

} // namespace morphfit::synth
