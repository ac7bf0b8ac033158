/*
 * morphfit - joint multi-scan alignment and 3D morphable face model fitting.
 *
 * File: include/morphfit/io/reports.hpp
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
#include "morphfit/pipeline.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace morphfit::io {

namespace report_detail {

inline std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

} // namespace report_detail

/// error history CSV: one row per iteration — iteration, mean_mm, variance_mm2.
inline void write_error_history_csv(const std::filesystem::path& path,
                                    const std::vector<IterationStats>& history) {
    std::ofstream os(path);
    if (!os) throw FormatError("error history: cannot open '" + path.string() + "' for writing");
    os << "iteration,mean_mm,variance_mm2\n";
    for (const IterationStats& s : history)
        os << s.iteration << "," << report_detail::num(s.mean_distance) << ","
           << report_detail::num(s.variance) << "\n";
}

inline std::vector<IterationStats> read_error_history_csv(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw FormatError("error history: cannot open '" + path.string() + "'");
    std::vector<IterationStats> out;
    std::string line;
    if (!std::getline(is, line)) throw FormatError("error history: empty file");
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        IterationStats s;
        char comma1 = 0, comma2 = 0;
        std::istringstream ls(line);
        ls >> s.iteration >> comma1 >> s.mean_distance >> comma2 >> s.variance;
        if (ls.fail() || comma1 != ',' || comma2 != ',')
            throw FormatError("error history: malformed row '" + line + "'");
        out.push_back(s);
    }
    return out;
}

/// relabel report CSV: scan_id, old and new label (new empty when excluded),
/// error statistic before and after.
inline void write_relabel_report_csv(const std::filesystem::path& path,
                                     const std::vector<RelabelRecord>& records) {
    std::ofstream os(path);
    if (!os) throw FormatError("relabel report: cannot open '" + path.string() + "' for writing");
    os << "scan_id,old_subject,new_subject,error_before,error_after\n";
    for (const RelabelRecord& r : records)
        os << r.scan_id << "," << r.old_subject << "," << r.new_subject << ","
           << report_detail::num(r.error_before) << "," << report_detail::num(r.error_after) << "\n";
}

/**
 * Minimal static SVG line chart of the error history: the mean curve with a
 * second polyline for the variance, log-free linear axes, no interactivity.
 */
inline void write_history_plot_svg(const std::filesystem::path& path,
                                   const std::vector<IterationStats>& history) {
    if (history.empty()) throw InvalidArgument("history plot: no data");
    const double width = 640.0, height = 400.0, margin = 50.0;

    double max_mean = 0.0, max_var = 0.0;
    for (const IterationStats& s : history) {
        max_mean = std::max(max_mean, s.mean_distance);
        max_var = std::max(max_var, s.variance);
    }
    max_mean = std::max(max_mean, 1e-12);
    max_var = std::max(max_var, 1e-12);

    const double x0 = margin, x1 = width - margin, y0 = height - margin, y1 = margin;
    auto x_of = [&](std::size_t i) {
        return history.size() == 1
                   ? (x0 + x1) / 2.0
                   : x0 + (x1 - x0) * static_cast<double>(i) / static_cast<double>(history.size() - 1);
    };
    auto polyline = [&](auto value_of, double max_value, const char* color) {
        std::string pts;
        for (std::size_t i = 0; i < history.size(); ++i) {
            const double y = y0 - (y0 - y1) * (value_of(history[i]) / max_value);
            pts += report_detail::num(x_of(i)) + "," + report_detail::num(y) + " ";
        }
        return "  <polyline fill=\"none\" stroke=\"" + std::string(color) +
               "\" stroke-width=\"2\" points=\"" + pts + "\"/>\n";
    };

    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"400\" "
           "viewBox=\"0 0 640 400\">\n";
    svg += "  <rect width=\"640\" height=\"400\" fill=\"white\"/>\n";
    svg += "  <line x1=\"50\" y1=\"350\" x2=\"590\" y2=\"350\" stroke=\"black\"/>\n";
    svg += "  <line x1=\"50\" y1=\"50\" x2=\"50\" y2=\"350\" stroke=\"black\"/>\n";
    svg += polyline([](const IterationStats& s) { return s.mean_distance; }, max_mean, "#c02020");
    svg += polyline([](const IterationStats& s) { return s.variance; }, max_var, "#2050c0");
    svg += "  <text x=\"60\" y=\"40\" font-size=\"13\" fill=\"#c02020\">mean distance (max " +
           report_detail::num(max_mean) + " mm)</text>\n";
    svg += "  <text x=\"300\" y=\"40\" font-size=\"13\" fill=\"#2050c0\">variance (max " +
           report_detail::num(max_var) + " mm^2)</text>\n";
    svg += "  <text x=\"280\" y=\"385\" font-size=\"13\">iteration (1.." +
           std::to_string(history.back().iteration) + ")</text>\n";
    svg += "</svg>\n";

    std::ofstream os(path);
    if (!os) throw FormatError("history plot: cannot open '" + path.string() + "' for writing");
    os << svg;
}

} // namespace morphfit::io
