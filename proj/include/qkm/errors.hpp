// Copyright 2026 The QKM Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace qkm {

/// Root of every error thrown by the library. `kind()` is the short name used
/// in CLI diagnostics ("LayoutError: ...").
class Error : public std::runtime_error {
   public:
    explicit Error(const std::string &what) : std::runtime_error(what) {}
    virtual const char *kind() const noexcept { return "Error"; }
};

#define QKM_DEFINE_ERROR(Name)                                   \
    class Name : public Error {                                  \
       public:                                                   \
        explicit Name(const std::string &what) : Error(what) {}  \
        const char *kind() const noexcept override { return #Name; } \
    };

QKM_DEFINE_ERROR(LayoutError)
QKM_DEFINE_ERROR(ShapeError)
QKM_DEFINE_ERROR(DomainError)
QKM_DEFINE_ERROR(IndexError)
QKM_DEFINE_ERROR(OracleSizeError)
QKM_DEFINE_ERROR(FitError)
QKM_DEFINE_ERROR(SymmetryError)
QKM_DEFINE_ERROR(IntegrationError)
QKM_DEFINE_ERROR(DegenerateError)
QKM_DEFINE_ERROR(ConfigError)

#undef QKM_DEFINE_ERROR

/// Malformed or truncated trajectory container. Carries the byte offset at
/// which decoding stopped.
class FormatError : public Error {
   public:
    FormatError(const std::string &what, std::size_t offset)
        : Error(what + " (at byte offset " + std::to_string(offset) + ")"), offset_(offset) {}
    const char *kind() const noexcept override { return "FormatError"; }
    std::size_t offset() const noexcept { return offset_; }

   private:
    std::size_t offset_;
};

}  // namespace qkm
