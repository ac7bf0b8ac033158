/*
 * morphfit - joint multi-scan alignment and 3D morphable face model fitting.
 *
 * File: include/morphfit/io/offsets_io.hpp
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

#include "morphfit/model_fit.hpp"
#include "morphfit/morphable_model.hpp"

#include <json.hpp>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

namespace morphfit::io {

// Offset-field debug dumps reuse the model container layout: magic, u64
// little-endian JSON header length, JSON header, float64 block.
constexpr char kOffsetsMagic[8] = {'M', 'F', 'O', 'F', 'F', 'S', '0', '1'};

inline void write_offset_field(const std::filesystem::path& path, const OffsetField& field,
                               const std::string& scan_id) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ModelFormatError("offsets file: cannot open '" + path.string() + "' for writing");

    nlohmann::json header;
    header["vertex_count"] = field.vertex_count();
    header["scan_id"] = scan_id;
    header["valid_rle"] = detail_io::mask_to_rle(field.validity);
    const std::string header_str = header.dump();

    os.write(kOffsetsMagic, 8);
    detail_io::write_u64(os, header_str.size());
    os.write(header_str.data(), static_cast<std::streamsize>(header_str.size()));

    std::vector<double> buf(static_cast<std::size_t>(field.vertex_count()) * 3);
    for (int v = 0; v < field.vertex_count(); ++v)
        for (int c = 0; c < 3; ++c) buf[static_cast<std::size_t>(3 * v + c)] = field.offsets(v, c);
    detail_io::write_block(os, buf.data(), buf.size());
    if (!os) throw ModelFormatError("offsets file: write failed for '" + path.string() + "'");
}

inline std::pair<OffsetField, std::string> read_offset_field(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ModelFormatError("offsets file: cannot open '" + path.string() + "'");

    char magic[8];
    is.read(magic, 8);
    if (!is || std::memcmp(magic, kOffsetsMagic, 8) != 0)
        throw ModelFormatError("offsets file: bad magic (expected MFOFFS01)");

    const std::uint64_t header_len = detail_io::read_u64(is);
    std::string header_str(header_len, '\0');
    is.read(header_str.data(), static_cast<std::streamsize>(header_len));
    if (!is) throw ModelFormatError("offsets file: truncated header");

    nlohmann::json header;
    try {
        header = nlohmann::json::parse(header_str);
    } catch (const nlohmann::json::exception& e) {
        throw ModelFormatError(std::string("offsets file: header is not valid JSON: ") + e.what());
    }

    OffsetField field;
    std::string scan_id;
    try {
        const auto v_count = header.at("vertex_count").get<std::int64_t>();
        scan_id = header.at("scan_id").get<std::string>();
        field.validity = detail_io::rle_to_mask(
            header.at("valid_rle").get<std::vector<std::int64_t>>(), v_count, "valid_rle");
        field.offsets.resize(v_count, 3);
    } catch (const nlohmann::json::exception& e) {
        throw ModelFormatError(std::string("offsets file: header field error: ") + e.what());
    }

    std::vector<double> buf(static_cast<std::size_t>(field.vertex_count()) * 3);
    detail_io::read_block(is, buf.data(), buf.size(), "offsets");
    for (int v = 0; v < field.vertex_count(); ++v)
        for (int c = 0; c < 3; ++c) field.offsets(v, c) = buf[static_cast<std::size_t>(3 * v + c)];
    return {std::move(field), std::move(scan_id)};
}

} // namespace morphfit::io
