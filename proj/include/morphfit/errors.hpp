/*
 * morphfit - joint multi-scan alignment and 3D morphable face model fitting.
 *
 * File: include/morphfit/errors.hpp
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

#include <stdexcept>
#include <string>

namespace morphfit {

/// Base class of every error thrown by the library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InvalidArgument : Error {
    using Error::Error;
};

struct EmptyCloud : Error {
    using Error::Error;
};

struct InsufficientPoints : Error {
    using Error::Error;
};

struct DegenerateCorrespondence : Error {
    using Error::Error;
};

struct InsufficientLandmarks : Error {
    using Error::Error;
};

struct DegenerateLandmarks : Error {
    using Error::Error;
};

struct EmptyAfterClustering : Error {
    using Error::Error;
};

struct EmptyAfterCrop : Error {
    using Error::Error;
};

struct ShapeError : Error {
    using Error::Error;
};

/// Model container file is malformed; the message names the offending field.
struct ModelFormatError : Error {
    using Error::Error;
};

/// Point cloud / mesh file could not be parsed; message carries line or byte offset.
struct ParseError : Error {
    using Error::Error;
};

struct FormatError : Error {
    using Error::Error;
};

struct ConfigError : Error {
    using Error::Error;
};

struct RankDeficient : Error {
    RankDeficient(const std::string& what, int effective_rank_in)
        : Error(what), effective_rank(effective_rank_in) {}
    int effective_rank;
};

} // namespace morphfit
