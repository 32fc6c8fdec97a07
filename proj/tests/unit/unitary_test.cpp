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

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

#include "qkm/rng.hpp"
#include "qkm/unitary.hpp"

namespace qkm {
namespace {

using Matrix = Eigen::MatrixXcd;

// Full 2^n x 2^n product of single-qubit R_z matrices; qubit 1 is the most
// significant tensor factor.
Matrix kron_rz(const std::vector<double> &angles) {
    Matrix out = Matrix::Identity(1, 1);
    for (double theta : angles) {
        Matrix rz = Matrix::Zero(2, 2);
        rz(0, 0) = std::polar(1.0, -theta / 2);
        rz(1, 1) = std::polar(1.0, theta / 2);
        Matrix next(out.rows() * 2, out.cols() * 2);
        for (Eigen::Index i = 0; i < out.rows(); ++i)
            for (Eigen::Index k = 0; k < out.cols(); ++k) next.block(2 * i, 2 * k, 2, 2) = out(i, k) * rz;
        out = next;
    }
    return out;
}

DiagonalHamiltonian single_block(const std::vector<double> &alphas) {
    return DiagonalHamiltonian(build_layout(std::uint64_t{1} << alphas.size(), 1, 1), {alphas});
}

TEST(Eigenvalues, TwoQubitTable) {
    const double a = 0.7, b = -1.3;
    const auto lambdas = subsystem_eigenvalues(single_block({a, b}), 1);
    ASSERT_EQ(lambdas.size(), 4u);
    EXPECT_DOUBLE_EQ(lambdas[0], -(a + b) / 2);
    EXPECT_DOUBLE_EQ(lambdas[1], -(a - b) / 2);
    EXPECT_DOUBLE_EQ(lambdas[2], (a - b) / 2);
    EXPECT_DOUBLE_EQ(lambdas[3], (a + b) / 2);
}

TEST(Eigenvalues, SpectrumSumsToZero) {
    Rng rng(5);
    std::vector<double> alphas(7);
    for (auto &a : alphas) a = rng.uniform(-3, 3);
    double sum = 0.0;
    for (double l : subsystem_eigenvalues(single_block(alphas), 1)) sum += l;
    EXPECT_NEAR(sum, 0.0, 1e-12);
}

TEST(Evolve, SingleQubitHalfTurn) {
    const auto h = single_block({std::numbers::pi});
    const auto phases = evolve_phase(std::vector<double>{0.0, 0.0}, h, 1, 1.0);
    EXPECT_DOUBLE_EQ(phases[0], -std::numbers::pi / 2);
    EXPECT_DOUBLE_EQ(phases[1], std::numbers::pi / 2);
}

TEST(Evolve, BlockEvolveKeepsModulus) {
    const auto layout = build_layout(4, 2, 3);
    const DiagonalHamiltonian h(layout, {{0.1, 0.2, 0.3}, {1.0, -1.0}, {2.0}});
    std::vector<double> r(14), phi(14, 0.0);
    for (int i = 0; i < 14; ++i) r[i] = 0.5 + i;
    const ObservableState state(layout, r, phi);
    const auto out = block_evolve(state, h, 2.0);
    for (int i = 0; i < 14; ++i) EXPECT_EQ(out.modulus()[i], r[i]);
    // Last block: single qubit alpha=2, t=2 -> phases -2, +2.
    EXPECT_DOUBLE_EQ(out.phase(3)[0], -2.0);
    EXPECT_DOUBLE_EQ(out.phase(3)[1], 2.0);

    const auto other = build_layout(8, 1, 3);
    const ObservableState mismatched(other, r, phi);
    EXPECT_THROW(block_evolve(mismatched, h, 1.0), LayoutError);
}

TEST(Hamiltonian, Validation) {
    const auto layout = build_layout(8, 1, 2);
    EXPECT_THROW(DiagonalHamiltonian(layout, {{1, 2, 3}}), LayoutError);
    EXPECT_THROW(DiagonalHamiltonian(layout, {{1, 2}, {1, 2}}), LayoutError);
    EXPECT_THROW(DiagonalHamiltonian(layout, {{1, 2, NAN}, {1, 2}}), DomainError);
    EXPECT_THROW(DiagonalHamiltonian::zero(layout).alphas(3), IndexError);
}

TEST(Circuit, MultiStepAngles) {
    const auto h = single_block({2.0, 4.0});
    const auto one = multi_step_operator(h, 1, 0.1, 1);
    ASSERT_EQ(one.gates.size(), 2u);
    EXPECT_DOUBLE_EQ(one.gates[0].angle, 0.2);
    EXPECT_DOUBLE_EQ(one.gates[1].angle, 0.4);
    const auto sixty = multi_step_operator(h, 1, 0.1, 60);
    ASSERT_EQ(sixty.gates.size(), 2u);
    EXPECT_NEAR(sixty.gates[0].angle, 12.0, 1e-12);
    EXPECT_NEAR(sixty.gates[1].angle, 24.0, 1e-12);
}

TEST(Circuit, GateCountIndependentOfSteps) {
    const auto h = single_block(std::vector<double>(9, 0.5));
    for (std::uint64_t k : {1ull, 7ull, 1000ull, 10000ull}) EXPECT_EQ(multi_step_operator(h, 1, 0.01, k).gates.size(), 9u);
}

TEST(Circuit, MatchesKroneckerProduct) {
    Rng rng(11);
    for (unsigned n = 1; n <= 6; ++n) {
        std::vector<double> alphas(n);
        for (auto &a : alphas) a = rng.uniform(-2, 2);
        const double t = rng.uniform(0, 3);
        const auto h = single_block(alphas);
        std::vector<double> angles(n);
        for (unsigned k = 0; k < n; ++k) angles[k] = alphas[k] * t;
        const Matrix u = kron_rz(angles);
        const auto lambdas = subsystem_eigenvalues(h, 1);
        const auto dense = dense_operator(h, 1, t);
        for (std::size_t l = 0; l < lambdas.size(); ++l) {
            EXPECT_NEAR(std::abs(u(l, l) - std::polar(1.0, lambdas[l] * t)), 0.0, 1e-12);
            EXPECT_NEAR(std::abs(u(l, l) - dense[l]), 0.0, 1e-12);
        }
        EXPECT_NEAR((u - Matrix(u.diagonal().asDiagonal())).norm(), 0.0, 1e-15);
    }
}

TEST(Circuit, TextRoundTrip) {
    const auto c = multi_step_operator(single_block({0.123456789, -9.87654321}), 1, 0.1, 3);
    std::istringstream in(c.to_text());
    const auto back = CircuitDescription::parse(in);
    ASSERT_EQ(back.gates.size(), c.gates.size());
    for (std::size_t i = 0; i < c.gates.size(); ++i) {
        EXPECT_EQ(back.gates[i].qubit, c.gates[i].qubit);
        EXPECT_EQ(back.gates[i].angle, c.gates[i].angle);
    }
    std::istringstream bad("qubits 2\ncx 1 2\n");
    EXPECT_THROW(CircuitDescription::parse(bad), ConfigError);
}

TEST(Circuit, ApplyMatchesLazyAmplitude) {
    Rng rng(3);
    std::vector<double> alphas(5), phases(32);
    for (auto &a : alphas) a = rng.uniform(-1, 1);
    for (auto &p : phases) p = rng.uniform(-3, 3);
    const auto circuit = multi_step_operator(single_block(alphas), 1, 0.2, 17);
    const PhaseEncodedState state(phases);
    auto amps = state.amplitudes();
    apply_circuit(amps, circuit);
    for (std::uint64_t l = 0; l < 32; ++l) EXPECT_NEAR(std::abs(amps[l] - state.evolved_amplitude(circuit, l)), 0.0, 1e-14);
    EXPECT_NEAR(statevector_norm(amps), 1.0, 1e-14);
}

TEST(QuantumState, EncodeDecode) {
    const std::vector<double> phases{0.0, 3.0, 6.0, -4.0};
    const auto state = encode_quantum_state(phases);
    EXPECT_EQ(state.qubits(), 2u);
    const auto decoded = decode_quantum_state(state);
    for (std::size_t l = 0; l < 4; ++l) EXPECT_NEAR(decoded[l], wrap_phase(phases[l]), 1e-15);
    EXPECT_NEAR(statevector_norm(state.amplitudes()), 1.0, 1e-15);
    EXPECT_THROW(PhaseEncodedState(std::vector<double>(3)), ShapeError);
}

TEST(DenseOracle, SizeLimit) {
    EXPECT_NO_THROW(dense_operator(single_block(std::vector<double>(12, 0.1)), 1, 1.0));
    EXPECT_THROW(dense_operator(single_block(std::vector<double>(13, 0.1)), 1, 1.0), OracleSizeError);
}

TEST(Parity, BigEndianOrder) {
    // qubit 1 is the most significant bit.
    EXPECT_EQ(basis_parity(0b100, 1, 3), -1);
    EXPECT_EQ(basis_parity(0b100, 3, 3), 1);
    EXPECT_EQ(basis_parity(0b001, 3, 3), -1);
}

TEST(Parity, SmallCases) {
    EXPECT_EQ(basis_parity(0, 1, 1), 1);
    EXPECT_EQ(basis_parity(1, 1, 1), -1);
    EXPECT_EQ(basis_parity(2, 1, 2), -1);
    EXPECT_EQ(basis_parity(2, 2, 2), 1);
    EXPECT_THROW(basis_parity(4, 1, 2), IndexError);
    EXPECT_THROW(basis_parity(0, 3, 2), IndexError);
}

TEST(Eigenvalues, SingleQubitAndZero) {
    const auto l = subsystem_eigenvalues(single_block({0.8}), 1);
    EXPECT_DOUBLE_EQ(l[0], -0.4);
    EXPECT_DOUBLE_EQ(l[1], 0.4);
    for (double v : subsystem_eigenvalues(single_block(std::vector<double>(4, 0.0)), 1)) EXPECT_EQ(v, 0.0);
}

TEST(Evolve, ZeroTimeIsIdentity) {
    const std::vector<double> phases{0.3, -1.0, 2.0, 0.0};
    EXPECT_EQ(evolve_phase(phases, single_block({1.0, 2.0}), 1, 0.0), phases);
}

TEST(Evolve, TwoBlocksMatchDenseBlocks) {
    const auto layout = build_layout(4, 1, 2);  // dims (4, 2)
    const double a = 0.9, b = -1.7, c = 0.35, t = 1.3;
    const DiagonalHamiltonian h(layout, {{a, b}, {c}});
    const std::vector<double> phi{0.1, 0.2, 0.3, 0.4, -0.5, 0.6};
    const ObservableState s(layout, std::vector<double>(6, 1.0), phi);
    const auto out = block_evolve(s, h, t);
    const auto d1 = dense_operator(DiagonalHamiltonian(build_layout(4, 1, 1), {{a, b}}), 1, t);
    const auto d2 = dense_operator(DiagonalHamiltonian(build_layout(2, 1, 1), {{c}}), 1, t);
    for (std::size_t l = 0; l < 4; ++l)
        EXPECT_NEAR(std::abs(std::polar(1.0, out.phase()[l]) - d1[l] * std::polar(1.0, phi[l])), 0.0, 1e-14);
    for (std::size_t l = 0; l < 2; ++l)
        EXPECT_NEAR(std::abs(std::polar(1.0, out.phase()[4 + l]) - d2[l] * std::polar(1.0, phi[4 + l])), 0.0, 1e-14);
}

TEST(Circuit, ZeroStepsIsIdentity) {
    const auto c = multi_step_operator(single_block({2.0, 4.0, -1.0}), 1, 0.1, 0);
    ASSERT_EQ(c.gates.size(), 3u);
    for (const auto &g : c.gates) EXPECT_EQ(g.angle, 0.0);
}

TEST(DenseOracle, IdentityAndStandardRz) {
    for (const auto &z : dense_operator(single_block({1.0, -2.0, 3.0}), 1, 0.0)) EXPECT_EQ(z, Complex(1.0, 0.0));
    const double theta = 0.77;
    const auto rz = dense_operator(single_block({theta / 2.0}), 1, 2.0);
    EXPECT_NEAR(std::abs(rz[0] - std::polar(1.0, -theta / 2)), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(rz[1] - std::polar(1.0, theta / 2)), 0.0, 1e-15);
}

TEST(QuantumState, SmallAmplitudes) {
    const auto zero = encode_quantum_state(std::vector<double>(4, 0.0)).amplitudes();
    for (const auto &a : zero) EXPECT_NEAR(std::abs(a - Complex(0.5, 0.0)), 0.0, 1e-15);
    const auto two = encode_quantum_state(std::vector<double>{0.0, std::numbers::pi}).amplitudes();
    EXPECT_NEAR(std::abs(two[0] - Complex(1 / std::sqrt(2.0), 0.0)), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(two[1] - Complex(-1 / std::sqrt(2.0), 0.0)), 0.0, 1e-15);
}

}  // namespace
}  // namespace qkm
