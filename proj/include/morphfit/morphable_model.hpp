/*
 * morphfit - joint multi-scan alignment and 3D morphable face model fitting.
 *
 * File: include/morphfit/morphable_model.hpp
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

#include <json.hpp>

#include <Eigen/Core>

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

namespace morphfit {

/// PCA shape coefficients (the model's latent weights), length K.
using ShapeCoefficients = Eigen::VectorXd;

/**
 * Per-vertex residual displacement on top of the PCA reconstruction.
 * Rows with validity == false are zero.
 */
struct DetailVector {
    Eigen::Matrix<double, Eigen::Dynamic, 3> delta; // V x 3, mm
    std::vector<std::uint8_t> validity;             // per vertex

    static DetailVector zero(int vertex_count) {
        DetailVector d;
        d.delta = Eigen::Matrix<double, Eigen::Dynamic, 3>::Zero(vertex_count, 3);
        d.validity.assign(static_cast<std::size_t>(vertex_count), 0);
        return d;
    }
};

/**
 * Linear shape model: mean vertices plus a PCA basis over vertex
 * displacements. The basis is stored as a (3V) x K matrix in vertex-major,
 * xyz-interleaved row order: row 3v + c holds coordinate c of vertex v, which
 * makes per-vertex row slicing trivial.
 */
struct MorphableModel {
    Eigen::Matrix<double, Eigen::Dynamic, 3> mean_vertices; // V x 3, mm
    Eigen::MatrixXd basis;                                  // 3V x K, mm per coefficient unit
    std::vector<std::array<int, 3>> faces;
    std::map<std::string, int> landmark_indices;
    std::vector<std::uint8_t> icp_crop_mask;

    int vertex_count() const { return static_cast<int>(mean_vertices.rows()); }
    int face_count() const { return static_cast<int>(faces.size()); }
    int rank() const { return static_cast<int>(basis.cols()); }

    Vec3 mean_vertex(int v) const { return mean_vertices.row(v).transpose(); }

    TriangleMesh mean_mesh() const {
        TriangleMesh mesh;
        mesh.vertices.reserve(static_cast<std::size_t>(vertex_count()));
        for (int v = 0; v < vertex_count(); ++v) mesh.vertices.push_back(mean_vertex(v));
        mesh.faces = faces;
        mesh.vertex_masks["icp_crop"] = icp_crop_mask;
        return mesh;
    }

    void validate() const {
        const int v_count = vertex_count();
        if (v_count < 1) throw ModelFormatError("model: vertex_count must be positive");
        if (basis.rows() != 3 * static_cast<Eigen::Index>(v_count))
            throw ModelFormatError("model: basis row count must equal 3 * vertex_count");
        if (basis.cols() < 1) throw ModelFormatError("model: basis_rank must be positive");
        for (const auto& f : faces)
            for (int idx : f)
                if (idx < 0 || idx >= v_count)
                    throw ModelFormatError("model: face index out of range");
        std::vector<std::uint8_t> seen(static_cast<std::size_t>(v_count), 0);
        for (const auto& [name, idx] : landmark_indices) {
            if (idx < 0 || idx >= v_count)
                throw ModelFormatError("model: landmark '" + name + "' index out of range");
            if (seen[static_cast<std::size_t>(idx)])
                throw ModelFormatError("model: landmark indices must be distinct");
            seen[static_cast<std::size_t>(idx)] = 1;
        }
        if (icp_crop_mask.size() != static_cast<std::size_t>(v_count))
            throw ModelFormatError("model: crop mask cardinality mismatch");
        if (std::find(icp_crop_mask.begin(), icp_crop_mask.end(), std::uint8_t{1}) ==
            icp_crop_mask.end())
            throw ModelFormatError("model: crop mask is empty");
    }

    /// Model-space positions of the named landmarks, on the mean mesh.
    LandmarkSet mean_landmark_positions() const {
        LandmarkSet out;
        for (const auto& [name, idx] : landmark_indices) out[name] = mean_vertex(idx);
        return out;
    }
};

/**
 * Reconstructs vertex positions V = mean + reshape(basis * A) + delta and
 * returns them with the model topology. A missing detail vector means zero.
 */
inline TriangleMesh reconstruct(const MorphableModel& model, const ShapeCoefficients& coeffs,
                                const DetailVector* detail = nullptr) {
    if (coeffs.size() != model.rank())
        throw ShapeError("reconstruct: coefficient length does not match basis rank");
    if (detail && detail->delta.rows() != model.mean_vertices.rows())
        throw ShapeError("reconstruct: detail vector cardinality mismatch");

    const Eigen::VectorXd displacement = model.basis * coeffs;
    TriangleMesh mesh;
    const int v_count = model.vertex_count();
    mesh.vertices.resize(static_cast<std::size_t>(v_count));
    for (int v = 0; v < v_count; ++v) {
        Vec3 pos = model.mean_vertex(v) + Vec3(displacement(3 * v), displacement(3 * v + 1),
                                               displacement(3 * v + 2));
        if (detail) pos += detail->delta.row(v).transpose();
        mesh.vertices[static_cast<std::size_t>(v)] = pos;
    }
    mesh.faces = model.faces;
    mesh.vertex_masks["icp_crop"] = model.icp_crop_mask;
    return mesh;
}

namespace detail_io {

constexpr char kModelMagic[8] = {'M', 'F', 'M', 'O', 'D', 'E', 'L', '1'};

inline void write_u64(std::ostream& os, std::uint64_t v) {
    unsigned char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(buf), 8);
}

inline std::uint64_t read_u64(std::istream& is) {
    unsigned char buf[8];
    is.read(reinterpret_cast<char*>(buf), 8);
    if (!is) throw ModelFormatError("model file: truncated header length");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    return v;
}

template <typename T>
void write_block(std::ostream& os, const T* data, std::size_t count) {
    os.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(count * sizeof(T)));
}

template <typename T>
void read_block(std::istream& is, T* data, std::size_t count, const char* field) {
    is.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(count * sizeof(T)));
    if (!is) throw ModelFormatError(std::string("model file: truncated block '") + field + "'");
}

/// Run-length encodes a boolean mask as alternating run lengths, first run
/// counting leading true values (possibly zero).
inline std::vector<std::int64_t> mask_to_rle(const std::vector<std::uint8_t>& mask) {
    std::vector<std::int64_t> runs;
    std::uint8_t current = 1;
    std::int64_t len = 0;
    for (std::uint8_t m : mask) {
        const std::uint8_t bit = m ? 1 : 0;
        if (bit == current) {
            ++len;
        } else {
            runs.push_back(len);
            current = bit;
            len = 1;
        }
    }
    runs.push_back(len);
    return runs;
}

inline std::vector<std::uint8_t> rle_to_mask(const std::vector<std::int64_t>& runs,
                                             std::int64_t expected, const char* field) {
    std::vector<std::uint8_t> mask;
    std::uint8_t current = 1;
    for (std::int64_t run : runs) {
        if (run < 0) throw ModelFormatError(std::string("model file: negative run in '") + field + "'");
        mask.insert(mask.end(), static_cast<std::size_t>(run), current);
        current = current ? 0 : 1;
    }
    if (static_cast<std::int64_t>(mask.size()) != expected)
        throw ModelFormatError(std::string("model file: run lengths in '") + field +
                               "' do not sum to vertex_count");
    return mask;
}

} // namespace detail_io

/**
 * Writes the model container: 8-byte magic "MFMODEL1", a little-endian u64
 * JSON header length, the JSON header {vertex_count, basis_rank, face_count,
 * landmarks, crop_mask_rle}, then raw little-endian blocks mean (V x 3
 * float64, vertex-major), basis (3V x K float64, row-major) and faces (F x 3
 * int32). Round-trips bit-exactly.
 */
inline void save_model(const MorphableModel& model, const std::filesystem::path& path) {
    model.validate();
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ModelFormatError("model file: cannot open '" + path.string() + "' for writing");

    nlohmann::json header;
    header["vertex_count"] = model.vertex_count();
    header["basis_rank"] = model.rank();
    header["face_count"] = model.face_count();
    header["landmarks"] = model.landmark_indices;
    header["crop_mask_rle"] = detail_io::mask_to_rle(model.icp_crop_mask);
    const std::string header_str = header.dump();

    os.write(detail_io::kModelMagic, 8);
    detail_io::write_u64(os, header_str.size());
    os.write(header_str.data(), static_cast<std::streamsize>(header_str.size()));

    const int v_count = model.vertex_count();
    std::vector<double> mean_buf(static_cast<std::size_t>(v_count) * 3);
    for (int v = 0; v < v_count; ++v)
        for (int c = 0; c < 3; ++c)
            mean_buf[static_cast<std::size_t>(3 * v + c)] = model.mean_vertices(v, c);
    detail_io::write_block(os, mean_buf.data(), mean_buf.size());

    std::vector<double> basis_buf(static_cast<std::size_t>(model.basis.rows()) *
                                  static_cast<std::size_t>(model.basis.cols()));
    for (Eigen::Index r = 0; r < model.basis.rows(); ++r)
        for (Eigen::Index c = 0; c < model.basis.cols(); ++c)
            basis_buf[static_cast<std::size_t>(r * model.basis.cols() + c)] = model.basis(r, c);
    detail_io::write_block(os, basis_buf.data(), basis_buf.size());

    std::vector<std::int32_t> face_buf;
    face_buf.reserve(model.faces.size() * 3);
    for (const auto& f : model.faces)
        for (int idx : f) face_buf.push_back(static_cast<std::int32_t>(idx));
    detail_io::write_block(os, face_buf.data(), face_buf.size());

    if (!os) throw ModelFormatError("model file: write failed for '" + path.string() + "'");
}

inline MorphableModel load_model(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ModelFormatError("model file: cannot open '" + path.string() + "'");

    char magic[8];
    is.read(magic, 8);
    if (!is || std::memcmp(magic, detail_io::kModelMagic, 8) != 0)
        throw ModelFormatError("model file: bad magic (expected MFMODEL1)");

    const std::uint64_t header_len = detail_io::read_u64(is);
    if (header_len > (1ull << 30)) throw ModelFormatError("model file: header length implausible");
    std::string header_str(header_len, '\0');
    is.read(header_str.data(), static_cast<std::streamsize>(header_len));
    if (!is) throw ModelFormatError("model file: truncated header");

    nlohmann::json header;
    try {
        header = nlohmann::json::parse(header_str);
    } catch (const nlohmann::json::exception& e) {
        throw ModelFormatError(std::string("model file: header is not valid JSON: ") + e.what());
    }

    MorphableModel model;
    std::int64_t v_count = 0, rank = 0, f_count = 0;
    try {
        v_count = header.at("vertex_count").get<std::int64_t>();
        rank = header.at("basis_rank").get<std::int64_t>();
        f_count = header.at("face_count").get<std::int64_t>();
        model.landmark_indices = header.at("landmarks").get<std::map<std::string, int>>();
        model.icp_crop_mask = detail_io::rle_to_mask(
            header.at("crop_mask_rle").get<std::vector<std::int64_t>>(), v_count, "crop_mask_rle");
    } catch (const nlohmann::json::exception& e) {
        throw ModelFormatError(std::string("model file: header field error: ") + e.what());
    }
    if (v_count < 1) throw ModelFormatError("model file: field 'vertex_count' must be positive");
    if (rank < 1) throw ModelFormatError("model file: field 'basis_rank' must be positive");
    if (f_count < 0) throw ModelFormatError("model file: field 'face_count' must be non-negative");

    std::vector<double> mean_buf(static_cast<std::size_t>(v_count) * 3);
    detail_io::read_block(is, mean_buf.data(), mean_buf.size(), "mean");
    model.mean_vertices.resize(v_count, 3);
    for (std::int64_t v = 0; v < v_count; ++v)
        for (int c = 0; c < 3; ++c)
            model.mean_vertices(v, c) = mean_buf[static_cast<std::size_t>(3 * v + c)];

    std::vector<double> basis_buf(static_cast<std::size_t>(3 * v_count) *
                                  static_cast<std::size_t>(rank));
    detail_io::read_block(is, basis_buf.data(), basis_buf.size(), "basis");
    model.basis.resize(3 * v_count, rank);
    for (Eigen::Index r = 0; r < model.basis.rows(); ++r)
        for (Eigen::Index c = 0; c < model.basis.cols(); ++c)
            model.basis(r, c) = basis_buf[static_cast<std::size_t>(r * rank + c)];

    std::vector<std::int32_t> face_buf(static_cast<std::size_t>(f_count) * 3);
    detail_io::read_block(is, face_buf.data(), face_buf.size(), "faces");
    model.faces.resize(static_cast<std::size_t>(f_count));
    for (std::int64_t f = 0; f < f_count; ++f)
        model.faces[static_cast<std::size_t>(f)] = {face_buf[static_cast<std::size_t>(3 * f)],
                                                    face_buf[static_cast<std::size_t>(3 * f + 1)],
                                                    face_buf[static_cast<std::size_t>(3 * f + 2)]};

    model.validate();
    return model;
}

} // namespace morphfit
