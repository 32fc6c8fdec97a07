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

#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "qkm/errors.hpp"

namespace qkm {

using Complex = std::complex<double>;

/// Principal value of an angle in (-pi, pi].
inline double wrap_phase(double angle) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    double w = std::remainder(angle, two_pi);
    if (w <= -std::numbers::pi) w += two_pi;
    return w;
}

inline std::vector<double> wrap_phases(std::span<const double> angles) {
    std::vector<double> out(angles.size());
    for (std::size_t i = 0; i < angles.size(); ++i) out[i] = wrap_phase(angles[i]);
    return out;
}

/// Hierarchy of h subsystems with halving dimensions N_j = 2^{1-j} c d.
///
/// Subsystems are 1-based in the public API (j = 1..h) and laid out
/// contiguously in that order inside every observable vector.
class SubsystemLayout {
   public:
    SubsystemLayout() = default;

    std::uint64_t state_dim() const noexcept { return d_; }
    std::uint64_t channels() const noexcept { return c_; }
    std::uint64_t subsystem_count() const noexcept { return h_; }
    const std::vector<std::uint64_t> &dims() const noexcept { return dims_; }
    const std::vector<unsigned> &qubits() const noexcept { return qubits_; }

    std::uint64_t dim(std::size_t j) const { return dims_.at(checked(j)); }
    unsigned qubit_count(std::size_t j) const { return qubits_.at(checked(j)); }
    /// Offset of subsystem j inside the concatenated vector.
    std::uint64_t offset(std::size_t j) const { return offsets_.at(checked(j)); }
    std::uint64_t total() const noexcept { return total_; }

    bool operator==(const SubsystemLayout &other) const noexcept {
        return d_ == other.d_ && c_ == other.c_ && h_ == other.h_;
    }

    std::string describe() const {
        return "layout(d=" + std::to_string(d_) + ", c=" + std::to_string(c_) +
               ", h=" + std::to_string(h_) + ")";
    }

   private:
    friend SubsystemLayout build_layout(std::uint64_t d, std::uint64_t c, std::uint64_t h);

    std::size_t checked(std::size_t j) const {
        if (j < 1 || j > h_) {
            throw IndexError("subsystem index " + std::to_string(j) + " outside 1.." +
                             std::to_string(h_));
        }
        return j - 1;
    }

    std::uint64_t d_ = 0, c_ = 0, h_ = 0, total_ = 0;
    std::vector<std::uint64_t> dims_;
    std::vector<std::uint64_t> offsets_;
    std::vector<unsigned> qubits_;
};

inline SubsystemLayout build_layout(std::uint64_t d, std::uint64_t c, std::uint64_t h) {
    if (d == 0 || c == 0 || h == 0) {
        throw LayoutError("layout parameters must be positive (d=" + std::to_string(d) +
                          ", c=" + std::to_string(c) + ", h=" + std::to_string(h) + ")");
    }
    const std::uint64_t first = c * d;
    if (first / c != d || !std::has_single_bit(first)) {
        throw LayoutError("c*d = " + std::to_string(c) + "*" + std::to_string(d) +
                          " is not a power of two");
    }
    const auto n1 = static_cast<unsigned>(std::countr_zero(first));
    // The smallest block must keep at least one qubit.
    if (h > n1) {
        throw LayoutError("h=" + std::to_string(h) + " too large for c*d=" +
                          std::to_string(first) + " (at most " + std::to_string(n1) + ")");
    }
    SubsystemLayout layout;
    layout.d_ = d;
    layout.c_ = c;
    layout.h_ = h;
    std::uint64_t offset = 0;
    for (std::uint64_t j = 0; j < h; ++j) {
        const std::uint64_t dim = first >> j;
        layout.dims_.push_back(dim);
        layout.offsets_.push_back(offset);
        layout.qubits_.push_back(n1 - static_cast<unsigned>(j));
        offset += dim;
    }
    layout.total_ = offset;
    return layout;
}

/// Modulus/phase pair representing f(x) = r * exp(i phi), concatenated over
/// subsystems. Phases are kept unwrapped.
class ObservableState {
   public:
    ObservableState() = default;

    ObservableState(SubsystemLayout layout, std::vector<double> modulus, std::vector<double> phase)
        : layout_(std::move(layout)), modulus_(std::move(modulus)), phase_(std::move(phase)) {
        if (modulus_.size() != layout_.total() || phase_.size() != layout_.total()) {
            throw ShapeError("observable lengths (" + std::to_string(modulus_.size()) + ", " +
                             std::to_string(phase_.size()) + ") do not match " +
                             layout_.describe() + " total " + std::to_string(layout_.total()));
        }
        for (double r : modulus_) {
            if (!(r >= 0.0)) throw DomainError("modulus entries must be nonnegative");
        }
    }

    const SubsystemLayout &layout() const noexcept { return layout_; }
    std::span<const double> modulus() const noexcept { return modulus_; }
    std::span<const double> phase() const noexcept { return phase_; }

    std::span<const double> modulus(std::size_t j) const {
        return std::span<const double>(modulus_).subspan(layout_.offset(j), layout_.dim(j));
    }
    std::span<const double> phase(std::size_t j) const {
        return std::span<const double>(phase_).subspan(layout_.offset(j), layout_.dim(j));
    }

   private:
    SubsystemLayout layout_;
    std::vector<double> modulus_;
    std::vector<double> phase_;
};

/// Element-wise r * exp(i phi).
inline std::vector<Complex> assemble_observable(std::span<const double> modulus,
                                                std::span<const double> phase) {
    if (modulus.size() != phase.size()) {
        throw ShapeError("modulus length " + std::to_string(modulus.size()) +
                         " != phase length " + std::to_string(phase.size()));
    }
    std::vector<Complex> out(modulus.size());
    for (std::size_t l = 0; l < modulus.size(); ++l) {
        if (!(modulus[l] >= 0.0)) throw DomainError("negative modulus at index " + std::to_string(l));
        out[l] = std::polar(modulus[l], phase[l]);
    }
    return out;
}

inline std::vector<Complex> assemble_observable(const ObservableState &state) {
    return assemble_observable(state.modulus(), state.phase());
}

struct SubsystemView {
    std::span<const double> modulus;
    std::span<const double> phase;
};

inline SubsystemView split_observable(const ObservableState &state, std::size_t j) {
    return {state.modulus(j), state.phase(j)};
}

}  // namespace qkm
