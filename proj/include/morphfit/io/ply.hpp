/*
 * morphfit - joint multi-scan alignment and 3D morphable face model fitting.
 *
 * File: include/morphfit/io/ply.hpp
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
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace morphfit::io {

enum class PlyFormat { ascii, binary_little_endian };

/// Raw contents of a PLY file; faces stay empty for pure point clouds.
struct PlyContents {
    std::vector<Vec3> points;
    std::optional<std::vector<Vec3>> normals;
    std::optional<std::vector<Rgb>> colors;
    std::vector<std::array<int, 3>> faces;
};

namespace ply_detail {

enum class Scalar { i8, u8, i16, u16, i32, u32, f32, f64 };

inline int scalar_size(Scalar s) {
    switch (s) {
        case Scalar::i8:
        case Scalar::u8: return 1;
        case Scalar::i16:
        case Scalar::u16: return 2;
        case Scalar::i32:
        case Scalar::u32:
        case Scalar::f32: return 4;
        case Scalar::f64: return 8;
    }
    return 0;
}

inline Scalar parse_scalar(const std::string& name, int line) {
    if (name == "char" || name == "int8") return Scalar::i8;
    if (name == "uchar" || name == "uint8") return Scalar::u8;
    if (name == "short" || name == "int16") return Scalar::i16;
    if (name == "ushort" || name == "uint16") return Scalar::u16;
    if (name == "int" || name == "int32") return Scalar::i32;
    if (name == "uint" || name == "uint32") return Scalar::u32;
    if (name == "float" || name == "float32") return Scalar::f32;
    if (name == "double" || name == "float64") return Scalar::f64;
    throw ParseError("ply: unknown property type '" + name + "' at header line " +
                     std::to_string(line));
}

struct Property {
    std::string name;
    Scalar type = Scalar::f32;
    bool is_list = false;
    Scalar count_type = Scalar::u8;
};

struct Element {
    std::string name;
    long long count = 0;
    std::vector<Property> properties;
};

/// Cursor over the body of the file, covering both ascii tokens and raw bytes.
struct Cursor {
    const std::string& data;
    std::size_t pos;
    bool ascii;
    long long line; // ascii line for error messages

    double next_ascii_number(const char* context) {
        while (pos < data.size() && std::isspace(static_cast<unsigned char>(data[pos]))) {
            if (data[pos] == '\n') ++line;
            ++pos;
        }
        if (pos >= data.size())
            throw ParseError(std::string("ply: unexpected end of file in ") + context + " (line " +
                             std::to_string(line) + ")");
        const char* start = data.c_str() + pos;
        char* end = nullptr;
        const double value = std::strtod(start, &end);
        if (end == start)
            throw ParseError(std::string("ply: expected a number in ") + context + " at line " +
                             std::to_string(line));
        pos += static_cast<std::size_t>(end - start);
        return value;
    }

    double next_binary(Scalar type, const char* context) {
        const std::size_t size = static_cast<std::size_t>(scalar_size(type));
        if (pos + size > data.size())
            throw ParseError(std::string("ply: unexpected end of file in ") + context +
                             " at byte offset " + std::to_string(pos));
        const unsigned char* b = reinterpret_cast<const unsigned char*>(data.data()) + pos;
        pos += size;
        auto le = [&](int n) {
            std::uint64_t v = 0;
            for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
            return v;
        };
        switch (type) {
            case Scalar::i8: return static_cast<double>(static_cast<std::int8_t>(b[0]));
            case Scalar::u8: return static_cast<double>(b[0]);
            case Scalar::i16: return static_cast<double>(static_cast<std::int16_t>(le(2)));
            case Scalar::u16: return static_cast<double>(static_cast<std::uint16_t>(le(2)));
            case Scalar::i32: return static_cast<double>(static_cast<std::int32_t>(le(4)));
            case Scalar::u32: return static_cast<double>(static_cast<std::uint32_t>(le(4)));
            case Scalar::f32: {
                const std::uint32_t bits = static_cast<std::uint32_t>(le(4));
                float f;
                std::memcpy(&f, &bits, 4);
                return static_cast<double>(f);
            }
            case Scalar::f64: {
                const std::uint64_t bits = le(8);
                double d;
                std::memcpy(&d, &bits, 8);
                return d;
            }
        }
        return 0.0;
    }

    double next(Scalar type, const char* context) {
        return ascii ? next_ascii_number(context) : next_binary(type, context);
    }
};

inline void append_le(std::string& out, const void* src, int n) {
    out.append(reinterpret_cast<const char*>(src), static_cast<std::size_t>(n));
}

inline void append_double(std::string& out, double v) { append_le(out, &v, 8); }

inline std::string format_g9(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

} // namespace ply_detail

inline PlyContents read_ply_contents(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ParseError("ply: cannot open '" + path.string() + "'");
    std::stringstream buffer;
    buffer << is.rdbuf();
    const std::string data = buffer.str();

    using namespace ply_detail;

    // --- header ---
    std::size_t pos = 0;
    long long line = 0;
    auto next_line = [&]() {
        if (pos >= data.size()) throw ParseError("ply: truncated header at line " + std::to_string(line));
        const std::size_t eol = data.find('\n', pos);
        std::string out = data.substr(pos, eol == std::string::npos ? std::string::npos : eol - pos);
        pos = eol == std::string::npos ? data.size() : eol + 1;
        ++line;
        if (!out.empty() && out.back() == '\r') out.pop_back();
        return out;
    };

    if (next_line() != "ply") throw ParseError("ply: missing 'ply' magic at line 1");

    bool ascii = false, format_seen = false;
    std::vector<Element> elements;
    for (;;) {
        const std::string l = next_line();
        std::istringstream ls(l);
        std::string word;
        ls >> word;
        if (word == "comment" || word == "obj_info" || word.empty()) continue;
        if (word == "format") {
            std::string fmt, version;
            ls >> fmt >> version;
            if (fmt == "ascii") ascii = true;
            else if (fmt == "binary_little_endian") ascii = false;
            else throw ParseError("ply: unsupported format '" + fmt + "' at line " + std::to_string(line));
            if (version != "1.0")
                throw ParseError("ply: unsupported version '" + version + "' at line " + std::to_string(line));
            format_seen = true;
        } else if (word == "element") {
            Element e;
            ls >> e.name >> e.count;
            if (ls.fail() || e.count < 0)
                throw ParseError("ply: malformed element declaration at line " + std::to_string(line));
            elements.push_back(e);
        } else if (word == "property") {
            if (elements.empty())
                throw ParseError("ply: property before any element at line " + std::to_string(line));
            Property p;
            std::string type_name;
            ls >> type_name;
            if (type_name == "list") {
                std::string count_name, item_name;
                ls >> count_name >> item_name >> p.name;
                if (ls.fail()) throw ParseError("ply: malformed list property at line " + std::to_string(line));
                p.is_list = true;
                p.count_type = parse_scalar(count_name, static_cast<int>(line));
                p.type = parse_scalar(item_name, static_cast<int>(line));
            } else {
                ls >> p.name;
                if (ls.fail()) throw ParseError("ply: malformed property at line " + std::to_string(line));
                p.type = parse_scalar(type_name, static_cast<int>(line));
            }
            elements.back().properties.push_back(p);
        } else if (word == "end_header") {
            break;
        } else {
            throw ParseError("ply: unexpected header keyword '" + word + "' at line " + std::to_string(line));
        }
    }
    if (!format_seen) throw ParseError("ply: header has no format line");

    // --- body ---
    Cursor cur{data, pos, ascii, line};
    PlyContents out;

    for (const Element& element : elements) {
        const bool is_vertex = element.name == "vertex";
        const bool is_face = element.name == "face";

        int ix = -1, iy = -1, iz = -1, inx = -1, iny = -1, inz = -1, ir = -1, ig = -1, ib = -1;
        int face_list = -1;
        if (is_vertex) {
            for (int i = 0; i < static_cast<int>(element.properties.size()); ++i) {
                const Property& p = element.properties[static_cast<std::size_t>(i)];
                if (p.is_list)
                    throw ParseError("ply: unexpected list property '" + p.name + "' in vertex element");
                if (p.name == "x") ix = i;
                else if (p.name == "y") iy = i;
                else if (p.name == "z") iz = i;
                else if (p.name == "nx") inx = i;
                else if (p.name == "ny") iny = i;
                else if (p.name == "nz") inz = i;
                else if (p.name == "red") ir = i;
                else if (p.name == "green") ig = i;
                else if (p.name == "blue") ib = i;
            }
            if (ix < 0 || iy < 0 || iz < 0)
                throw ParseError("ply: vertex element lacks x/y/z properties");
            const bool has_normals = inx >= 0 && iny >= 0 && inz >= 0;
            const bool has_colors = ir >= 0 && ig >= 0 && ib >= 0;
            if (has_normals) out.normals.emplace();
            if (has_colors) out.colors.emplace();
            out.points.reserve(static_cast<std::size_t>(element.count));

            std::vector<double> values(element.properties.size());
            for (long long n = 0; n < element.count; ++n) {
                const std::string context = "vertex " + std::to_string(n);
                for (std::size_t i = 0; i < element.properties.size(); ++i)
                    values[i] = cur.next(element.properties[i].type, context.c_str());
                const Vec3 p(values[static_cast<std::size_t>(ix)], values[static_cast<std::size_t>(iy)],
                             values[static_cast<std::size_t>(iz)]);
                if (!is_finite(p))
                    throw ParseError("ply: non-finite coordinate in vertex " + std::to_string(n));
                out.points.push_back(p);
                if (has_normals) {
                    Vec3 nvec(values[static_cast<std::size_t>(inx)], values[static_cast<std::size_t>(iny)],
                              values[static_cast<std::size_t>(inz)]);
                    const double norm = nvec.norm();
                    if (norm < 1e-12)
                        throw ParseError("ply: zero-length normal in vertex " + std::to_string(n));
                    if (std::abs(norm - 1.0) > 1e-6) nvec /= norm;
                    out.normals->push_back(nvec);
                }
                if (has_colors) {
                    auto byte = [&](int idx) {
                        const double v = values[static_cast<std::size_t>(idx)];
                        if (v < 0.0 || v > 255.0)
                            throw ParseError("ply: color out of range in vertex " + std::to_string(n));
                        return static_cast<std::uint8_t>(v);
                    };
                    out.colors->push_back({byte(ir), byte(ig), byte(ib)});
                }
            }
        } else if (is_face) {
            for (int i = 0; i < static_cast<int>(element.properties.size()); ++i) {
                const Property& p = element.properties[static_cast<std::size_t>(i)];
                if (p.is_list && (p.name == "vertex_indices" || p.name == "vertex_index")) face_list = i;
            }
            if (face_list < 0) throw ParseError("ply: face element lacks a vertex_indices list");
            out.faces.reserve(static_cast<std::size_t>(element.count));
            for (long long n = 0; n < element.count; ++n) {
                const std::string context = "face " + std::to_string(n);
                std::array<int, 3> face{};
                for (int i = 0; i < static_cast<int>(element.properties.size()); ++i) {
                    const Property& p = element.properties[static_cast<std::size_t>(i)];
                    if (!p.is_list) {
                        cur.next(p.type, context.c_str());
                        continue;
                    }
                    const double count = cur.next(p.count_type, context.c_str());
                    if (i == face_list) {
                        if (count != 3.0)
                            throw ParseError("ply: face " + std::to_string(n) + " is not a triangle");
                        for (int c = 0; c < 3; ++c)
                            face[static_cast<std::size_t>(c)] =
                                static_cast<int>(cur.next(p.type, context.c_str()));
                    } else {
                        for (long long c = 0; c < static_cast<long long>(count); ++c)
                            cur.next(p.type, context.c_str());
                    }
                }
                out.faces.push_back(face);
            }
        } else {
            // Unknown element: consume and discard field by field.
            for (long long n = 0; n < element.count; ++n)
                for (const Property& p : element.properties) {
                    if (p.is_list) {
                        const double count = cur.next(p.count_type, element.name.c_str());
                        for (long long c = 0; c < static_cast<long long>(count); ++c)
                            cur.next(p.type, element.name.c_str());
                    } else {
                        cur.next(p.type, element.name.c_str());
                    }
                }
        }
    }

    return out;
}

inline PointCloudScan read_ply(const std::filesystem::path& path, std::string scan_id = "",
                               std::string subject_label = "") {
    PlyContents contents = read_ply_contents(path);
    PointCloudScan scan;
    scan.points = std::move(contents.points);
    scan.normals = std::move(contents.normals);
    scan.colors = std::move(contents.colors);
    scan.scan_id = std::move(scan_id);
    scan.subject_label = std::move(subject_label);
    return scan;
}

inline TriangleMesh read_ply_mesh(const std::filesystem::path& path) {
    PlyContents contents = read_ply_contents(path);
    TriangleMesh mesh;
    mesh.vertices = std::move(contents.points);
    mesh.faces = std::move(contents.faces);
    mesh.validate();
    return mesh;
}

namespace ply_detail {

inline void write_ply_impl(const std::filesystem::path& path, const std::vector<Vec3>& points,
                           const std::optional<std::vector<Vec3>>& normals,
                           const std::optional<std::vector<Rgb>>& colors,
                           const std::vector<std::array<int, 3>>* faces, PlyFormat format) {
    if (normals && normals->size() != points.size())
        throw ShapeError("write_ply: normal cardinality mismatch");
    if (colors && colors->size() != points.size())
        throw ShapeError("write_ply: color cardinality mismatch");

    const bool ascii = format == PlyFormat::ascii;
    std::string out;
    out += "ply\n";
    out += ascii ? "format ascii 1.0\n" : "format binary_little_endian 1.0\n";
    out += "element vertex " + std::to_string(points.size()) + "\n";
    // Coordinates are written double-precision so binary round trips are
    // bit-exact; float32 inputs are still accepted by the reader.
    out += "property double x\nproperty double y\nproperty double z\n";
    if (normals) out += "property double nx\nproperty double ny\nproperty double nz\n";
    if (colors) out += "property uchar red\nproperty uchar green\nproperty uchar blue\n";
    if (faces) {
        out += "element face " + std::to_string(faces->size()) + "\n";
        out += "property list uchar int vertex_indices\n";
    }
    out += "end_header\n";

    for (std::size_t i = 0; i < points.size(); ++i) {
        if (ascii) {
            out += format_g9(points[i].x()) + " " + format_g9(points[i].y()) + " " +
                   format_g9(points[i].z());
            if (normals)
                out += " " + format_g9((*normals)[i].x()) + " " + format_g9((*normals)[i].y()) +
                       " " + format_g9((*normals)[i].z());
            if (colors)
                out += " " + std::to_string((*colors)[i][0]) + " " + std::to_string((*colors)[i][1]) +
                       " " + std::to_string((*colors)[i][2]);
            out += "\n";
        } else {
            append_double(out, points[i].x());
            append_double(out, points[i].y());
            append_double(out, points[i].z());
            if (normals) {
                append_double(out, (*normals)[i].x());
                append_double(out, (*normals)[i].y());
                append_double(out, (*normals)[i].z());
            }
            if (colors) out.append(reinterpret_cast<const char*>((*colors)[i].data()), 3);
        }
    }

    if (faces) {
        for (const auto& f : *faces) {
            if (ascii) {
                out += "3 " + std::to_string(f[0]) + " " + std::to_string(f[1]) + " " +
                       std::to_string(f[2]) + "\n";
            } else {
                const std::uint8_t three = 3;
                out.push_back(static_cast<char>(three));
                for (int c = 0; c < 3; ++c) {
                    const std::int32_t idx = f[static_cast<std::size_t>(c)];
                    append_le(out, &idx, 4);
                }
            }
        }
    }

    std::ofstream os(path, std::ios::binary);
    if (!os) throw ParseError("ply: cannot open '" + path.string() + "' for writing");
    os.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!os) throw ParseError("ply: write failed for '" + path.string() + "'");
}

} // namespace ply_detail

inline void write_ply(const std::filesystem::path& path, const PointCloudScan& scan,
                      PlyFormat format = PlyFormat::binary_little_endian) {
    ply_detail::write_ply_impl(path, scan.points, scan.normals, scan.colors, nullptr, format);
}

inline void write_ply_mesh(const std::filesystem::path& path, const TriangleMesh& mesh,
                           PlyFormat format = PlyFormat::binary_little_endian) {
    mesh.validate();
    ply_detail::write_ply_impl(path, mesh.vertices, std::nullopt, std::nullopt, &mesh.faces, format);
}

} // namespace morphfit::io
