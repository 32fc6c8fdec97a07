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

#include <cmath>
#include <complex>
#include <span>
#include <string>

#include "qkm/errors.hpp"

namespace qkm {

/// Relative L2 error ||pred - truth|| / ||truth||.
///
/// `squared = true` gives the squared-norm ratio; the default returns its
/// square root, which is the number usually quoted as a percentage.
template <typename T>
double relative_l2(std::span<const T> pred, std::span<const T> truth, bool squared = false) {
    if (pred.size() != truth.size()) {
        throw ShapeError("relative_l2: prediction has " + std::to_string(pred.size()) +
                         " values, truth has " + std::to_string(truth.size()));
    }
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        num += std::norm(pred[i] - truth[i]);
        den += std::norm(truth[i]);
    }
    if (!(den > 0.0)) throw DomainError("relative_l2: reference has zero norm");
    const double ratio = num / den;
    return squared ? ratio : std::sqrt(ratio);
}

inline double relative_l2(std::span<const double> pred, std::span<const double> truth, bool squared = false) {
    return relative_l2<double>(pred, truth, squared);
}

}  // namespace qkm
