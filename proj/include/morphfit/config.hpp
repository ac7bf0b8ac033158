/*
 * morphfit - joint multi-scan alignment and 3D morphable face model fitting.
 *
 * File: include/morphfit/config.hpp
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
#include "morphfit/icp.hpp"
#include "morphfit/io/json_io.hpp"
#include "morphfit/pose_init.hpp"
#include "morphfit/preprocess.hpp"

#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <string>

namespace morphfit {

/// Iteration schedule of the refinement phases plus the mislabel gate.
struct PhasePlan {
    int phase1_iters = 4;           // geometry + alignment, no detail
    int phase2_iters = 3;           // with the detail vector
    bool use_detail_in_phase2 = true;
    double mislabel_threshold = 1.1; // mean squared distance (mm^2) by default
    bool mislabel_use_rms = false;   // alternate reading: RMS distance (mm)

    void validate() const {
        if (phase1_iters < 1 || phase2_iters < 1)
            throw ConfigError("PhasePlan: phase iteration counts must be >= 1");
        if (mislabel_threshold <= 0.0)
            throw ConfigError("PhasePlan: mislabel_threshold must be positive");
    }
};

/**
 * Every tunable of the pipeline, overridable from a JSON config file and
 * mirrored by CLI flags. Unknown keys in the file are rejected.
 */
struct RunConfig {
    std::uint64_t seed = 0;
    int jobs = 0; // 0 = hardware concurrency
    FilterParams filter;
    double hole_threshold_mm = 10.0;
    double regularization = 0.0;
    PoseInitParams pose;
    IcpParams icp;
    PhasePlan plan;

    void validate() const {
        filter.validate();
        icp.validate();
        plan.validate();
        if (hole_threshold_mm <= 0.0) throw ConfigError("config: hole_threshold_mm must be positive");
        if (regularization < 0.0) throw ConfigError("config: regularization must be non-negative");
        if (pose.eval_sample_size < 1) throw ConfigError("config: pose_eval_sample_size must be >= 1");
        if (pose.low_confidence_gate_mm <= 0.0)
            throw ConfigError("config: pose_gate_mm must be positive");
        if (jobs < 0) throw ConfigError("config: jobs must be >= 0");
    }
};

namespace config_detail {

template <typename T>
void take(nlohmann::json& j, const char* key, T& out) {
    const auto it = j.find(key);
    if (it == j.end()) return;
    try {
        out = it->get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError(std::string("config: key '") + key + "' has the wrong type");
    }
    j.erase(it);
}

} // namespace config_detail

/// Applies a JSON config object on top of the given defaults.
inline RunConfig apply_config_json(nlohmann::json j, RunConfig config = RunConfig{}) {
    using config_detail::take;
    if (!j.is_object()) throw ConfigError("config: top level must be an object");

    take(j, "seed", config.seed);
    take(j, "jobs", config.jobs);
    take(j, "normal_k", config.filter.normal_k);
    take(j, "normal_estimation_k", config.filter.normal_estimation_k);
    take(j, "angle_threshold_deg", config.filter.angle_threshold_deg);
    take(j, "dbscan_eps_mm", config.filter.dbscan_eps_mm);
    take(j, "dbscan_min_pts", config.filter.dbscan_min_pts);
    take(j, "crop_radius_mm", config.filter.crop_radius_mm);
    take(j, "hole_threshold_mm", config.hole_threshold_mm);
    take(j, "regularization", config.regularization);
    take(j, "pose_eval_sample_size", config.pose.eval_sample_size);
    take(j, "pose_gate_mm", config.pose.low_confidence_gate_mm);
    take(j, "icp_downsample_fraction", config.icp.downsample_fraction);
    take(j, "icp_max_iterations", config.icp.max_iterations);
    take(j, "icp_convergence_tol_mm", config.icp.convergence_tol_mm);
    take(j, "phase1_iters", config.plan.phase1_iters);
    take(j, "phase2_iters", config.plan.phase2_iters);
    take(j, "use_detail_in_phase2", config.plan.use_detail_in_phase2);
    take(j, "mislabel_threshold", config.plan.mislabel_threshold);

    std::string metric;
    take(j, "mislabel_metric", metric);
    if (!metric.empty()) {
        if (metric == "mean_squared") config.plan.mislabel_use_rms = false;
        else if (metric == "rms") config.plan.mislabel_use_rms = true;
        else throw ConfigError("config: mislabel_metric must be 'mean_squared' or 'rms'");
    }

    if (!j.empty())
        throw ConfigError("config: unknown key '" + j.begin().key() + "'");
    config.validate();
    return config;
}

inline RunConfig load_config(const std::filesystem::path& path, RunConfig defaults = RunConfig{}) {
    return apply_config_json(io::load_json(path, "config"), defaults);
}

/// Serializes a config back out (used to echo the effective settings of a run).
inline nlohmann::json config_to_json(const RunConfig& c) {
    nlohmann::json j;
    j["seed"] = c.seed;
    j["jobs"] = c.jobs;
    j["normal_k"] = c.filter.normal_k;
    j["normal_estimation_k"] = c.filter.normal_estimation_k;
    j["angle_threshold_deg"] = c.filter.angle_threshold_deg;
    j["dbscan_eps_mm"] = c.filter.dbscan_eps_mm;
    j["dbscan_min_pts"] = c.filter.dbscan_min_pts;
    j["crop_radius_mm"] = c.filter.crop_radius_mm;
    j["hole_threshold_mm"] = c.hole_threshold_mm;
    j["regularization"] = c.regularization;
    j["pose_eval_sample_size"] = c.pose.eval_sample_size;
    j["pose_gate_mm"] = c.pose.low_confidence_gate_mm;
    j["icp_downsample_fraction"] = c.icp.downsample_fraction;
    j["icp_max_iterations"] = c.icp.max_iterations;
    j["icp_convergence_tol_mm"] = c.icp.convergence_tol_mm;
    j["phase1_iters"] = c.plan.phase1_iters;
    j["phase2_iters"] = c.plan.phase2_iters;
    j["use_detail_in_phase2"] = c.plan.use_detail_in_phase2;
    j["mislabel_threshold"] = c.plan.mislabel_threshold;
    j["mislabel_metric"] = c.plan.mislabel_use_rms ? "rms" : "mean_squared";
    return j;
}

/// Default config location from the MORPHFIT_CONFIG environment variable.
inline RunConfig load_default_config() {
    RunConfig config;
    if (const char* env = std::getenv("MORPHFIT_CONFIG"); env && *env)
        config = load_config(env, config);
    return config;
}

} // namespace morphfit
