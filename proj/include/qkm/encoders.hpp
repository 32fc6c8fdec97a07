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

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "qkm/errors.hpp"
#include "qkm/fft.hpp"
#include "qkm/layout.hpp"
#include "qkm/relative_error.hpp"
#include "qkm/trajectory_io.hpp"

namespace qkm {

/// Observable map f = (f_r, f_phi) and its inverse.
class ObservableEncoder {
   public:
    virtual ~ObservableEncoder() = default;

    virtual std::string name() const = 0;
    virtual const SubsystemLayout &layout() const = 0;
    /// Number of reals in one state snapshot.
    virtual std::size_t state_size() const = 0;
    virtual ObservableState encode(std::span<const double> state) const = 0;
    virtual std::vector<double> decode(const ObservableState &obs) const = 0;

    /// Relative L2 error of a decoded prediction against a stored snapshot.
    /// State-space by default; encoders whose states are angles or latents
    /// compare in observable space instead.
    virtual double relative_error(std::span<const double> pred, std::span<const double> truth,
                                  bool squared) const {
        return relative_l2(pred, truth, squared);
    }

   protected:
    void check_size(std::span<const double> state) const {
        if (state.size() != state_size()) {
            throw ShapeError(name() + " encoder expects " + std::to_string(state_size()) + " values, got " +
                             std::to_string(state.size()));
        }
    }
    void check_layout(const ObservableState &obs) const {
        if (!(obs.layout() == layout())) {
            throw LayoutError(name() + " encoder uses " + layout().describe() + ", observable has " +
                              obs.layout().describe());
        }
    }
};

/// Torus angles as phases on unit modulus. Index l of the observable is
/// angle l of the state. Decoding returns principal values.
class IdentityPhaseEncoder final : public ObservableEncoder {
   public:
    explicit IdentityPhaseEncoder(std::uint64_t d) : layout_(build_layout(d, 1, 1)) {}
    explicit IdentityPhaseEncoder(const SubsystemLayout &layout) : layout_(layout) {
        if (layout.subsystem_count() != 1 || layout.channels() != 1) {
            throw LayoutError("identity phase encoder needs c=1, h=1, got " + layout.describe());
        }
    }

    std::string name() const override { return "identity"; }
    const SubsystemLayout &layout() const override { return layout_; }
    std::size_t state_size() const override { return layout_.state_dim(); }

    ObservableState encode(std::span<const double> angles) const override {
        if (angles.size() != state_size()) {
            throw LayoutError("identity encoder for d=" + std::to_string(state_size()) + " got " +
                              std::to_string(angles.size()) + " angles");
        }
        return ObservableState(layout_, std::vector<double>(angles.size(), 1.0),
                               std::vector<double>(angles.begin(), angles.end()));
    }

    std::vector<double> decode(const ObservableState &obs) const override {
        check_layout(obs);
        return wrap_phases(obs.phase());
    }

    double relative_error(std::span<const double> pred, std::span<const double> truth,
                          bool squared) const override {
        std::vector<Complex> p(pred.size()), t(truth.size());
        for (std::size_t i = 0; i < p.size(); ++i) p[i] = std::polar(1.0, pred[i]);
        for (std::size_t i = 0; i < t.size(); ++i) t[i] = std::polar(1.0, truth[i]);
        return relative_l2<Complex>(p, t, squared);
    }

   private:
    SubsystemLayout layout_;
};

struct FourierDecodeResult {
    std::vector<double> field;
    double imaginary_residue = 0.0;  // max |Im| after the inverse transform
};

/// DFT observables of a real field: r_l = |X_l|, phi_l = arg X_l in natural
/// bin order l = 0..d-1. Unnormalized forward transform, 1/d inverse.
/// Empty bins get phi = 0; negative real bins get phi = pi.
///
/// 2D fields go through row-major flattening, so a bin index here is a 1D
/// frequency of the flattened signal, not a 2D wavevector.
class FourierEncoder final : public ObservableEncoder {
   public:
    /// `strict` decoding throws SymmetryError when the evolved spectrum is no
    /// longer conjugate-symmetric; otherwise the real part is returned and the
    /// residue is only reported.
    explicit FourierEncoder(std::uint64_t d, bool strict = true, double symmetry_tolerance = 1e-9)
        : layout_(build_layout(d, 1, 1)), strict_(strict), tolerance_(symmetry_tolerance) {}

    std::string name() const override { return "fourier"; }
    const SubsystemLayout &layout() const override { return layout_; }
    std::size_t state_size() const override { return layout_.state_dim(); }
    bool strict() const noexcept { return strict_; }

    ObservableState encode(std::span<const double> field) const override {
        check_size(field);
        const auto spectrum = fft::forward(field);
        std::vector<double> modulus(spectrum.size()), phase(spectrum.size());
        for (std::size_t l = 0; l < spectrum.size(); ++l) {
            modulus[l] = std::abs(spectrum[l]);
            phase[l] = modulus[l] == 0.0 ? 0.0 : wrap_phase(std::arg(spectrum[l]));
        }
        return ObservableState(layout_, std::move(modulus), std::move(phase));
    }

    FourierDecodeResult decode_with_residue(const ObservableState &obs) const {
        check_layout(obs);
        const auto spectrum = assemble_observable(obs);
        const auto signal = fft::inverse(spectrum);
        FourierDecodeResult out;
        out.field.resize(signal.size());
        for (std::size_t m = 0; m < signal.size(); ++m) {
            out.field[m] = signal[m].real();
            out.imaginary_residue = std::max(out.imaginary_residue, std::abs(signal[m].imag()));
        }
        return out;
    }

    std::vector<double> decode(const ObservableState &obs) const override {
        auto result = decode_with_residue(obs);
        if (strict_ && result.imaginary_residue > tolerance_) {
            throw SymmetryError("inverse transform left imaginary residue " +
                                std::to_string(result.imaginary_residue) + " (tolerance " +
                                std::to_string(tolerance_) + "); spectrum lost conjugate symmetry");
        }
        return std::move(result.field);
    }

   private:
    SubsystemLayout layout_;
    bool strict_;
    double tolerance_;
};

/// Pass-through for externally produced latents. A state snapshot is the
/// concatenation [r ; phi] of length 2N.
class LatentEncoder final : public ObservableEncoder {
   public:
    explicit LatentEncoder(SubsystemLayout layout) : layout_(std::move(layout)) {}

    std::string name() const override { return "latent"; }
    const SubsystemLayout &layout() const override { return layout_; }
    std::size_t state_size() const override { return 2 * layout_.total(); }

    ObservableState encode(std::span<const double> state) const override {
        check_size(state);
        const std::size_t n = layout_.total();
        return ObservableState(layout_, std::vector<double>(state.begin(), state.begin() + static_cast<long>(n)),
                               std::vector<double>(state.begin() + static_cast<long>(n), state.end()));
    }

    std::vector<double> decode(const ObservableState &obs) const override {
        check_layout(obs);
        std::vector<double> out(obs.modulus().begin(), obs.modulus().end());
        out.insert(out.end(), obs.phase().begin(), obs.phase().end());
        return out;
    }

    double relative_error(std::span<const double> pred, std::span<const double> truth,
                          bool squared) const override {
        check_size(pred);
        check_size(truth);
        const std::size_t n = layout_.total();
        const auto p = assemble_observable(pred.first(n), pred.subspan(n));
        const auto t = assemble_observable(truth.first(n), truth.subspan(n));
        return relative_l2<Complex>(p, t, squared);
    }

   private:
    SubsystemLayout layout_;
};

/// Encoder factory used by the CLI: "identity", "fourier", "latent".
inline std::unique_ptr<ObservableEncoder> make_encoder(const std::string &name, const SubsystemLayout &layout,
                                                       bool strict_symmetry = true) {
    if (name == "identity") return std::make_unique<IdentityPhaseEncoder>(layout);
    if (name == "fourier") {
        if (layout.subsystem_count() != 1 || layout.channels() != 1) {
            throw LayoutError("fourier encoder needs c=1, h=1, got " + layout.describe());
        }
        return std::make_unique<FourierEncoder>(layout.state_dim(), strict_symmetry);
    }
    if (name == "latent") return std::make_unique<LatentEncoder>(layout);
    throw ConfigError("unknown encoder '" + name + "' (expected identity, fourier or latent)");
}

// ---------------------------------------------------------------------------
// Latent trajectories

struct LatentTrajectory {
    SubsystemLayout layout;
    double dt = 1.0;
    std::vector<ObservableState> states;  // k = 0..T
    double modulus_drift = 0.0;           // max_{k,l} |r_l(k) - r_l(0)|
};

/// Layout keys carried in the metadata of latent containers.
inline void set_layout_metadata(TrajectoryDataset &ds, const SubsystemLayout &layout) {
    ds.set_meta("layout_d", std::to_string(layout.state_dim()));
    ds.set_meta("layout_c", std::to_string(layout.channels()));
    ds.set_meta("layout_h", std::to_string(layout.subsystem_count()));
}

/// Validates a latent container (payload kind 1, dims (2, N), layout in the
/// metadata) and splits it into per-step observables.
inline LatentTrajectory load_latent_trajectory(const TrajectoryDataset &ds) {
    if (ds.kind != PayloadKind::Latent) throw FormatError("container does not hold a latent payload", 7 + 4);
    auto get = [&](const char *key) -> std::uint64_t {
        const auto v = ds.meta(key);
        if (!v) throw FormatError(std::string("latent container lacks metadata key ") + key, 0);
        try {
            return std::stoull(*v);
        } catch (const std::exception &) {
            throw FormatError(std::string("metadata key ") + key + " is not an integer", 0);
        }
    };
    SubsystemLayout layout;
    try {
        layout = build_layout(get("layout_d"), get("layout_c"), get("layout_h"));
    } catch (const LayoutError &e) {
        throw FormatError(std::string("declared layout is invalid: ") + e.what(), 0);
    }
    if (ds.dims.size() != 2 || ds.dims[0] != 2 || ds.dims[1] != layout.total()) {
        std::string shape;
        for (auto d : ds.dims) shape += (shape.empty() ? "" : "x") + std::to_string(d);
        throw FormatError("latent planes have shape " + shape + ", " + layout.describe() + " needs 2x" +
                              std::to_string(layout.total()),
                          0);
    }
    LatentTrajectory out;
    out.layout = layout;
    out.dt = ds.dt;
    const LatentEncoder encoder(layout);
    for (std::size_t k = 0; k < ds.snapshot_count(); ++k) {
        try {
            out.states.push_back(encoder.encode(ds.snapshot(k)));
        } catch (const DomainError &e) {
            throw FormatError("snapshot " + std::to_string(k) + ": " + e.what(), 0);
        }
    }
    const auto r0 = out.states.front().modulus();
    for (const auto &s : out.states) {
        const auto r = s.modulus();
        for (std::size_t l = 0; l < r.size(); ++l) out.modulus_drift = std::max(out.modulus_drift, std::abs(r[l] - r0[l]));
    }
    return out;
}

inline LatentTrajectory load_latent_trajectory(const std::filesystem::path &path) {
    return load_latent_trajectory(read_trajectory(path));
}

}  // namespace qkm
