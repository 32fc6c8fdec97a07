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
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "qkm/errors.hpp"
#include "qkm/layout.hpp"

namespace qkm {

// Qubit k = 1..n is the bit of weight 2^{n-k} in a basis index l (big-endian),
// so l = sum_m l_m 2^{n-m}.

/// Eigenvalue of Z on qubit k for basis state |l>: +1 if the bit is 0, -1 if 1.
inline int basis_parity(std::uint64_t l, unsigned k, unsigned n) {
    if (n == 0 || n > 63) throw IndexError("qubit count " + std::to_string(n) + " out of range");
    if (k < 1 || k > n) {
        throw IndexError("qubit index " + std::to_string(k) + " outside 1.." + std::to_string(n));
    }
    if (l >= (std::uint64_t{1} << n)) {
        throw IndexError("basis index " + std::to_string(l) + " outside [0, 2^" +
                         std::to_string(n) + ")");
    }
    return ((l >> (n - k)) & 1U) ? -1 : 1;
}

/// Diagonal generator H_j = -1/2 sum_k alpha_jk Z_k for every subsystem of a
/// layout. Coefficients are in radians per unit time.
class DiagonalHamiltonian {
   public:
    DiagonalHamiltonian() = default;

    DiagonalHamiltonian(SubsystemLayout layout, std::vector<std::vector<double>> alphas)
        : layout_(std::move(layout)), alphas_(std::move(alphas)) {
        if (alphas_.size() != layout_.subsystem_count()) {
            throw LayoutError("expected " + std::to_string(layout_.subsystem_count()) +
                              " coefficient blocks, got " + std::to_string(alphas_.size()));
        }
        for (std::size_t j = 0; j < alphas_.size(); ++j) {
            if (alphas_[j].size() != layout_.qubits()[j]) {
                throw LayoutError("subsystem " + std::to_string(j + 1) + " needs " +
                                  std::to_string(layout_.qubits()[j]) + " coefficients, got " +
                                  std::to_string(alphas_[j].size()));
            }
            for (double a : alphas_[j]) {
                if (!std::isfinite(a)) throw DomainError("non-finite Hamiltonian coefficient");
            }
        }
    }

    /// All-zero coefficients (identity evolution).
    static DiagonalHamiltonian zero(const SubsystemLayout &layout) {
        std::vector<std::vector<double>> alphas;
        for (unsigned n : layout.qubits()) alphas.emplace_back(n, 0.0);
        return DiagonalHamiltonian(layout, std::move(alphas));
    }

    const SubsystemLayout &layout() const noexcept { return layout_; }
    const std::vector<std::vector<double>> &alphas() const noexcept { return alphas_; }
    std::span<const double> alphas(std::size_t j) const {
        return alphas_.at(checked(j));
    }

   private:
    std::size_t checked(std::size_t j) const {
        if (j < 1 || j > alphas_.size()) {
            throw IndexError("subsystem index " + std::to_string(j) + " outside 1.." +
                             std::to_string(alphas_.size()));
        }
        return j - 1;
    }

    SubsystemLayout layout_;
    std::vector<std::vector<double>> alphas_;
};

/// lambda_l = -1/2 sum_k alpha_k z_k(l) for a single block of coefficients.
/// O(n) per query.
inline double eigenvalue_from_alphas(std::span<const double> alphas, std::uint64_t l) {
    const auto n = static_cast<unsigned>(alphas.size());
    double sum = 0.0;
    for (unsigned k = 1; k <= n; ++k) sum += alphas[k - 1] * basis_parity(l, k, n);
    return -0.5 * sum;
}

inline double hamiltonian_eigenvalue(const DiagonalHamiltonian &hamiltonian, std::size_t j,
                                     std::uint64_t l) {
    return eigenvalue_from_alphas(hamiltonian.alphas(j), l);
}

/// Every eigenvalue of block j, in basis order.
inline std::vector<double> subsystem_eigenvalues(const DiagonalHamiltonian &hamiltonian,
                                                 std::size_t j) {
    const auto alphas = hamiltonian.alphas(j);
    const std::uint64_t dim = std::uint64_t{1} << alphas.size();
    std::vector<double> lambdas(dim);
    for (std::uint64_t l = 0; l < dim; ++l) lambdas[l] = eigenvalue_from_alphas(alphas, l);
    return lambdas;
}

/// phi_l(t) = phi_l + lambda_l t. The modulus is not an input: it never moves.
inline std::vector<double> evolve_phase(std::span<const double> phases,
                                        const DiagonalHamiltonian &hamiltonian, std::size_t j,
                                        double t) {
    const auto alphas = hamiltonian.alphas(j);
    const std::uint64_t dim = std::uint64_t{1} << alphas.size();
    if (phases.size() != dim) {
        throw ShapeError("phase block has length " + std::to_string(phases.size()) +
                         ", subsystem " + std::to_string(j) + " expects " + std::to_string(dim));
    }
    std::vector<double> out(phases.begin(), phases.end());
    for (std::uint64_t l = 0; l < dim; ++l) out[l] += eigenvalue_from_alphas(alphas, l) * t;
    return out;
}

/// Block-diagonal evolution: each subsystem's phase evolves independently and
/// the modulus is copied verbatim.
inline ObservableState block_evolve(const ObservableState &state,
                                    const DiagonalHamiltonian &hamiltonian, double t) {
    if (!(state.layout() == hamiltonian.layout())) {
        throw LayoutError("state " + state.layout().describe() + " vs Hamiltonian " +
                          hamiltonian.layout().describe());
    }
    const auto &layout = state.layout();
    std::vector<double> phase(layout.total());
    for (std::size_t j = 1; j <= layout.subsystem_count(); ++j) {
        auto block = evolve_phase(state.phase(j), hamiltonian, j, t);
        std::copy(block.begin(), block.end(), phase.begin() + static_cast<long>(layout.offset(j)));
    }
    auto modulus = state.modulus();
    return ObservableState(layout, std::vector<double>(modulus.begin(), modulus.end()),
                           std::move(phase));
}

// ---------------------------------------------------------------------------
// Circuits

struct RzGate {
    unsigned qubit;  // 1-based
    double angle;    // radians
};

/// A layer of parallel single-qubit R_z gates, one per qubit, no entanglers.
struct CircuitDescription {
    unsigned qubits = 0;
    std::vector<RzGate> gates;

    std::string to_text() const {
        std::ostringstream out;
        out << "qubits " << qubits << '\n';
        out << std::setprecision(17);
        for (const auto &g : gates) out << "rz " << g.qubit << ' ' << g.angle << '\n';
        return out.str();
    }

    static CircuitDescription parse(std::istream &in) {
        CircuitDescription circuit;
        std::string word;
        if (!(in >> word) || word != "qubits" || !(in >> circuit.qubits)) {
            throw ConfigError("circuit text must start with 'qubits <n>'");
        }
        while (in >> word) {
            if (word != "rz") throw ConfigError("unknown gate '" + word + "'");
            RzGate g{};
            if (!(in >> g.qubit >> g.angle)) throw ConfigError("malformed rz line");
            if (g.qubit < 1 || g.qubit > circuit.qubits) throw IndexError("rz qubit out of range");
            circuit.gates.push_back(g);
        }
        return circuit;
    }
};

/// Circuit for (U^{dt})^k on block j: n_j gates with angles alpha_jm * k * dt,
/// regardless of k.
inline CircuitDescription multi_step_operator(const DiagonalHamiltonian &hamiltonian,
                                              std::size_t j, double dt, std::uint64_t k) {
    const auto alphas = hamiltonian.alphas(j);
    CircuitDescription circuit;
    circuit.qubits = static_cast<unsigned>(alphas.size());
    const double elapsed = static_cast<double>(k) * dt;
    for (unsigned m = 1; m <= circuit.qubits; ++m) circuit.gates.push_back({m, alphas[m - 1] * elapsed});
    return circuit;
}

/// Gate-by-gate statevector simulation: R_z(theta) = diag(e^{-i theta/2}, e^{+i theta/2}).
inline void apply_circuit(std::span<Complex> amplitudes, const CircuitDescription &circuit) {
    const unsigned n = circuit.qubits;
    if (amplitudes.size() != (std::size_t{1} << n)) {
        throw ShapeError("statevector length " + std::to_string(amplitudes.size()) +
                         " does not match " + std::to_string(n) + " qubits");
    }
    for (const auto &g : circuit.gates) {
        const Complex on_zero = std::polar(1.0, -0.5 * g.angle);
        const Complex on_one = std::polar(1.0, 0.5 * g.angle);
        const std::size_t mask = std::size_t{1} << (n - g.qubit);
        for (std::size_t l = 0; l < amplitudes.size(); ++l) {
            amplitudes[l] *= (l & mask) ? on_one : on_zero;
        }
    }
}

/// Total phase the circuit imprints on basis state l. O(n).
inline double circuit_phase(const CircuitDescription &circuit, std::uint64_t l) {
    double phase = 0.0;
    for (const auto &g : circuit.gates) phase -= 0.5 * g.angle * basis_parity(l, g.qubit, circuit.qubits);
    return phase;
}

// ---------------------------------------------------------------------------
// Phase-encoded quantum states

/// |phi> = N^{-1/2} sum_l e^{i phi_l} |l>. Phases are stored unwrapped.
class PhaseEncodedState {
   public:
    PhaseEncodedState() = default;
    explicit PhaseEncodedState(std::vector<double> phases) : phases_(std::move(phases)) {
        if (phases_.empty() || !std::has_single_bit(phases_.size())) {
            throw ShapeError("phase-encoded state needs a power-of-two length, got " +
                             std::to_string(phases_.size()));
        }
        qubits_ = static_cast<unsigned>(std::countr_zero(phases_.size()));
    }

    unsigned qubits() const noexcept { return qubits_; }
    std::size_t size() const noexcept { return phases_.size(); }
    std::span<const double> phases() const noexcept { return phases_; }

    Complex amplitude(std::uint64_t l) const {
        return std::polar(1.0 / std::sqrt(static_cast<double>(phases_.size())), phases_.at(l));
    }

    std::vector<Complex> amplitudes() const {
        std::vector<Complex> out(phases_.size());
        for (std::size_t l = 0; l < out.size(); ++l) out[l] = amplitude(l);
        return out;
    }

    /// Amplitude of basis state l after running `circuit`, without touching the
    /// other 2^n - 1 amplitudes. O(n).
    Complex evolved_amplitude(const CircuitDescription &circuit, std::uint64_t l) const {
        return std::polar(1.0 / std::sqrt(static_cast<double>(phases_.size())),
                          phases_.at(l) + circuit_phase(circuit, l));
    }

    /// Same evolution carried on the unwrapped phases.
    PhaseEncodedState evolved(const CircuitDescription &circuit) const {
        if (circuit.qubits != qubits_) throw ShapeError("circuit width does not match state");
        std::vector<double> next(phases_);
        for (std::size_t l = 0; l < next.size(); ++l) next[l] += circuit_phase(circuit, l);
        return PhaseEncodedState(std::move(next));
    }

   private:
    unsigned qubits_ = 0;
    std::vector<double> phases_;
};

inline PhaseEncodedState encode_quantum_state(std::span<const double> phases) {
    return PhaseEncodedState(std::vector<double>(phases.begin(), phases.end()));
}

/// Principal-value phases in (-pi, pi]. The global phase of a quantum state is
/// unobservable; the classical absolute phase is only available through
/// `PhaseEncodedState::phases()` (unwrapped).
inline std::vector<double> decode_quantum_state(const PhaseEncodedState &state) {
    return wrap_phases(state.phases());
}

/// Phases read back from an arbitrary statevector, e.g. after `apply_circuit`.
inline std::vector<double> decode_quantum_state(std::span<const Complex> amplitudes) {
    if (amplitudes.empty() || !std::has_single_bit(amplitudes.size())) {
        throw ShapeError("statevector needs a power-of-two length");
    }
    std::vector<double> out(amplitudes.size());
    for (std::size_t l = 0; l < out.size(); ++l) out[l] = wrap_phase(std::arg(amplitudes[l]));
    return out;
}

inline double statevector_norm(std::span<const Complex> amplitudes) {
    double sum = 0.0;
    for (const auto &a : amplitudes) sum += std::norm(a);
    return std::sqrt(sum);
}

// ---------------------------------------------------------------------------
// Brute-force oracle

inline constexpr unsigned kDenseOracleMaxQubits = 12;

/// Diagonal of exp(i H_j t), with H_j assembled term by term from explicit
/// Kronecker products of Z and I. Independent of the parity/bit path above.
inline std::vector<Complex> dense_operator(const DiagonalHamiltonian &hamiltonian, std::size_t j,
                                           double t) {
    const auto alphas = hamiltonian.alphas(j);
    const auto n = static_cast<unsigned>(alphas.size());
    if (n > kDenseOracleMaxQubits) {
        throw OracleSizeError("dense oracle limited to " + std::to_string(kDenseOracleMaxQubits) +
                              " qubits, block has " + std::to_string(n));
    }
    const std::vector<double> pauli_z{1.0, -1.0};
    const std::vector<double> identity{1.0, 1.0};
    auto kron = [](const std::vector<double> &a, const std::vector<double> &b) {
        std::vector<double> out(a.size() * b.size());
        for (std::size_t i = 0; i < a.size(); ++i)
            for (std::size_t k = 0; k < b.size(); ++k) out[i * b.size() + k] = a[i] * b[k];
        return out;
    };
    std::vector<double> generator(std::size_t{1} << n, 0.0);
    for (unsigned k = 1; k <= n; ++k) {
        std::vector<double> term{1.0};
        for (unsigned m = 1; m <= n; ++m) term = kron(term, m == k ? pauli_z : identity);
        for (std::size_t l = 0; l < term.size(); ++l) generator[l] += -0.5 * alphas[k - 1] * term[l];
    }
    std::vector<Complex> diag(generator.size());
    for (std::size_t l = 0; l < diag.size(); ++l) diag[l] = std::exp(Complex(0.0, generator[l] * t));
    return diag;
}

}  // namespace qkm
