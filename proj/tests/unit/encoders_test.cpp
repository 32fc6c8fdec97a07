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

#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "qkm/encoders.hpp"
#include "qkm/model.hpp"
#include "qkm/rng.hpp"

namespace qkm {
namespace {

std::vector<Complex> naive_dft(const std::vector<double> &x) {
    const std::size_t n = x.size();
    std::vector<Complex> out(n);
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t m = 0; m < n; ++m)
            out[k] += x[m] * std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(k * m % n) / n);
    return out;
}

TEST(FourierEncoder, ConstantField) {
    const FourierEncoder enc(4);
    const auto obs = enc.encode(std::vector<double>(4, 2.5));
    EXPECT_NEAR(obs.modulus()[0], 10.0, 1e-14);
    for (int l = 1; l < 4; ++l) {
        EXPECT_NEAR(obs.modulus()[l], 0.0, 1e-14);
        EXPECT_EQ(obs.phase()[l], 0.0);
    }
    EXPECT_EQ(obs.phase()[0], 0.0);
    EXPECT_NEAR(FourierEncoder(4).encode(std::vector<double>(4, -1.0)).phase()[0], std::numbers::pi, 1e-15);
}

TEST(FourierEncoder, CosineBins) {
    const std::size_t d = 16;
    std::vector<double> u(d);
    for (std::size_t m = 0; m < d; ++m) u[m] = std::cos(2 * std::numbers::pi * m / d);
    const auto obs = FourierEncoder(d).encode(u);
    EXPECT_NEAR(obs.modulus()[1], d / 2.0, 1e-12);
    EXPECT_NEAR(obs.modulus()[d - 1], d / 2.0, 1e-12);
    for (std::size_t l = 0; l < d; ++l)
        if (l != 1 && l != d - 1) {
            EXPECT_NEAR(obs.modulus()[l], 0.0, 1e-12);
        }
}

TEST(FourierEncoder, MatchesNaiveDftAndParseval) {
    Rng rng(17);
    std::vector<double> u(64);
    for (auto &v : u) v = rng.normal();
    const auto obs = FourierEncoder(64).encode(u);
    const auto ref = naive_dft(u);
    double energy = 0.0, spectral = 0.0;
    for (std::size_t l = 0; l < 64; ++l) {
        EXPECT_NEAR(obs.modulus()[l], std::abs(ref[l]), 1e-11);
        EXPECT_NEAR(std::abs(std::polar(1.0, obs.phase()[l]) - ref[l] / std::abs(ref[l])), 0.0, 1e-11);
        energy += u[l] * u[l];
        spectral += obs.modulus()[l] * obs.modulus()[l];
    }
    EXPECT_NEAR(spectral / 64.0, energy, 1e-10 * energy);
}

TEST(FourierEncoder, RoundTrip) {
    Rng rng(8);
    std::vector<double> u(128);
    for (auto &v : u) v = rng.uniform(-1, 1);
    const FourierEncoder enc(128);
    const auto back = enc.decode(enc.encode(u));
    for (std::size_t i = 0; i < u.size(); ++i) EXPECT_NEAR(back[i], u[i], 1e-13);
}

TEST(FourierEncoder, BrokenSymmetry) {
    std::vector<double> u(8);
    for (std::size_t m = 0; m < 8; ++m) u[m] = std::cos(2 * std::numbers::pi * m / 8);
    const FourierEncoder strict(8), lenient(8, false);
    const auto obs = strict.encode(u);
    std::vector<double> phase(obs.phase().begin(), obs.phase().end());
    phase[1] += 0.5;  // bin 1 no longer mirrors bin 7
    const ObservableState skewed(obs.layout(), std::vector<double>(obs.modulus().begin(), obs.modulus().end()),
                                 phase);
    EXPECT_THROW(strict.decode(skewed), SymmetryError);
    const auto result = lenient.decode_with_residue(skewed);
    EXPECT_GT(result.imaginary_residue, 1e-3);
    EXPECT_NO_THROW(lenient.decode(skewed));
}

TEST(IdentityEncoder, UnitModulusAndWrap) {
    const IdentityPhaseEncoder enc(4);
    const auto obs = enc.encode(std::vector<double>{0.0, 1.0, 7.0, -4.0});
    for (double r : obs.modulus()) EXPECT_EQ(r, 1.0);
    const auto back = enc.decode(obs);
    EXPECT_NEAR(back[2], 7.0 - 2 * std::numbers::pi, 1e-15);
    // Angles one turn apart are the same point.
    EXPECT_NEAR(enc.relative_error(std::vector<double>{0.0, 1.0, 7.0, -4.0},
                                   std::vector<double>{0.0, 1.0, 7.0 - 2 * std::numbers::pi, -4.0}, false),
                0.0, 1e-15);
    EXPECT_THROW(enc.encode(std::vector<double>(3)), LayoutError);
}

TEST(LatentEncoder, LayoutAndErrors) {
    const auto layout = build_layout(4, 1, 2);
    const LatentEncoder enc(layout);
    EXPECT_EQ(enc.state_size(), 12u);
    std::vector<double> state(12);
    for (int i = 0; i < 6; ++i) {
        state[i] = 1.0 + i;
        state[6 + i] = 0.1 * i;
    }
    const auto obs = enc.encode(state);
    EXPECT_EQ(obs.modulus(2)[0], 5.0);
    EXPECT_EQ(enc.decode(obs), state);
    state[0] = -1.0;
    EXPECT_THROW(enc.encode(state), DomainError);
}

TEST(LatentEncoder, PredictPreservesModulus) {
    const auto layout = build_layout(8, 1, 2);
    const DiagonalHamiltonian h(layout, {{0.5, -0.25, 1.0}, {2.0, 0.1}});
    const KoopmanModel model{h, std::vector<double>{0.3, -0.1}};
    std::vector<double> r(12), phi(12);
    for (int i = 0; i < 12; ++i) {
        r[i] = 0.5 * i;
        phi[i] = std::sin(i);
    }
    const ObservableState s(layout, r, phi);
    const auto out = predict(model, s, 3.5);
    for (int i = 0; i < 12; ++i) EXPECT_EQ(out.modulus()[i], r[i]);
    // Drift applies to every index of its block.
    EXPECT_NEAR(out.phase(2)[0] - phi[8], 3.5 * (-(2.0 + 0.1) / 2 - 0.1), 1e-12);
}

TEST(LatentContainer, LoadValidates) {
    const auto layout = build_layout(4, 1, 2);
    TrajectoryDataset ds;
    ds.kind = PayloadKind::Latent;
    ds.dims = {2, 6};
    ds.steps = 1;
    ds.dt = 0.5;
    ds.values.assign(24, 1.0);
    EXPECT_THROW(load_latent_trajectory(ds), FormatError);
    set_layout_metadata(ds, layout);
    const auto latent = load_latent_trajectory(ds);
    EXPECT_EQ(latent.states.size(), 2u);
    EXPECT_EQ(latent.modulus_drift, 0.0);
    ds.dims = {2, 5};
    ds.values.assign(20, 1.0);
    EXPECT_THROW(load_latent_trajectory(ds), FormatError);
    ds.kind = PayloadKind::RawState;
    EXPECT_THROW(load_latent_trajectory(ds), FormatError);
}

TEST(MakeEncoder, Names) {
    const auto layout = build_layout(8, 1, 1);
    EXPECT_EQ(make_encoder("identity", layout)->name(), "identity");
    EXPECT_EQ(make_encoder("fourier", layout)->name(), "fourier");
    EXPECT_EQ(make_encoder("latent", layout)->name(), "latent");
    EXPECT_THROW(make_encoder("pca", layout), ConfigError);
    EXPECT_THROW(make_encoder("fourier", build_layout(8, 1, 2)), LayoutError);
}

TEST(IdentityEncoder, PassThrough) {
    const IdentityPhaseEncoder enc(2);
    const auto obs = enc.encode(std::vector<double>{std::numbers::pi / 3, -std::numbers::pi / 4});
    EXPECT_EQ(obs.phase()[0], std::numbers::pi / 3);
    EXPECT_EQ(obs.phase()[1], -std::numbers::pi / 4);
    const auto zero = IdentityPhaseEncoder(4).encode(std::vector<double>(4, 0.0));
    for (std::size_t l = 0; l < 4; ++l) {
        EXPECT_EQ(zero.modulus()[l], 1.0);
        EXPECT_EQ(zero.phase()[l], 0.0);
    }
}

TEST(FourierEncoder, SymmetricSingleModeDecodesToCosine) {
    const std::size_t d = 16;
    std::vector<double> r(d, 0.0), phi(d, 0.0);
    r[2] = r[d - 2] = d / 2.0;
    const FourierEncoder enc(d);
    const auto u = enc.decode(ObservableState(enc.layout(), r, phi));
    for (std::size_t m = 0; m < d; ++m) EXPECT_NEAR(u[m], std::cos(2 * 2 * std::numbers::pi * m / d), 1e-14);
}

TEST(FourierEncoder, SmallAsymmetryRejected) {
    const std::size_t d = 8;
    std::vector<double> r(d, 0.0), phi(d, 0.0);
    r[1] = r[d - 1] = 1.0;
    r[2] = 1e-3 * d;  // unmatched bin: residue 1e-3
    const FourierEncoder enc(d);
    const ObservableState obs(enc.layout(), r, phi);
    EXPECT_NEAR(enc.decode_with_residue(obs).imaginary_residue, 1e-3, 1e-12);
    EXPECT_THROW(enc.decode(obs), SymmetryError);
}

TEST(LatentContainer, DriftIsReported) {
    const auto layout = build_layout(2, 1, 1);
    TrajectoryDataset ds;
    ds.kind = PayloadKind::Latent;
    ds.dims = {2, 2};
    ds.steps = 2;
    ds.dt = 0.1;
    ds.values = {1.0, 2.0, 0.0, 0.0, 1.0, 2.05, 0.1, 0.2, 1.0, 2.0, 0.2, 0.4};
    set_layout_metadata(ds, layout);
    EXPECT_NEAR(load_latent_trajectory(ds).modulus_drift, 0.05, 1e-15);
    auto bytes = encode_trajectory(ds);
    bytes.resize(bytes.size() - 1);
    EXPECT_THROW(load_latent_trajectory(decode_trajectory(bytes)), FormatError);
}

}  // namespace
}  // namespace qkm
