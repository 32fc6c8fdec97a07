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

#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "qkm/errors.hpp"
#include "qkm/layout.hpp"
#include "qkm/unitary.hpp"

namespace qkm {

/// A fitted block-diagonal Koopman model: the diagonal Hamiltonian plus an
/// optional uniform phase drift per subsystem (radians per unit time). The
/// drift is a scalar phase added classically, never a gate.
struct KoopmanModel {
    DiagonalHamiltonian hamiltonian;
    std::optional<std::vector<double>> global_phase_rates;
};

/// One-shot evolution to time t: every block advances by exp(i H_j t) in a
/// single application, whatever t is.
inline ObservableState predict(const KoopmanModel &model, const ObservableState &initial, double t) {
    ObservableState evolved = block_evolve(initial, model.hamiltonian, t);
    if (!model.global_phase_rates) return evolved;
    const auto &layout = evolved.layout();
    const auto &rates = *model.global_phase_rates;
    if (rates.size() != layout.subsystem_count()) {
        throw LayoutError("global phase rates do not match subsystem count");
    }
    std::vector<double> phase(evolved.phase().begin(), evolved.phase().end());
    for (std::size_t j = 1; j <= layout.subsystem_count(); ++j) {
        const double shift = rates[j - 1] * t;
        for (std::uint64_t l = 0; l < layout.dim(j); ++l) phase[layout.offset(j) + l] += shift;
    }
    auto modulus = evolved.modulus();
    return ObservableState(layout, std::vector<double>(modulus.begin(), modulus.end()),
                           std::move(phase));
}

// .qkham text format
//
//   layout <d> <c> <h>
//   global_phase <rate_1> ... <rate_h> | none     (radians per unit time)
//   alpha <j> <k> <value>                          (one line per coefficient)

inline std::string to_qkham(const KoopmanModel &model) {
    const auto &layout = model.hamiltonian.layout();
    std::ostringstream out;
    out << std::setprecision(17);
    out << "layout " << layout.state_dim() << ' ' << layout.channels() << ' '
        << layout.subsystem_count() << '\n';
    out << "global_phase";
    if (model.global_phase_rates) {
        for (double g : *model.global_phase_rates) out << ' ' << g;
    } else {
        out << " none";
    }
    out << '\n';
    for (std::size_t j = 1; j <= layout.subsystem_count(); ++j) {
        const auto alphas = model.hamiltonian.alphas(j);
        for (std::size_t k = 0; k < alphas.size(); ++k) {
            out << "alpha " << j << ' ' << (k + 1) << ' ' << alphas[k] << '\n';
        }
    }
    return out.str();
}

inline KoopmanModel parse_qkham(std::istream &in) {
    std::string line, word;
    auto fail = [](const std::string &msg) -> ConfigError { return ConfigError(".qkham: " + msg); };

    if (!std::getline(in, line)) throw fail("empty file");
    std::istringstream head(line);
    std::uint64_t d = 0, c = 0, h = 0;
    if (!(head >> word >> d >> c >> h) || word != "layout") throw fail("expected 'layout <d> <c> <h>'");
    const SubsystemLayout layout = build_layout(d, c, h);

    if (!std::getline(in, line)) throw fail("missing global_phase line");
    std::istringstream gp(line);
    if (!(gp >> word) || word != "global_phase") throw fail("expected 'global_phase' line");
    std::optional<std::vector<double>> rates;
    std::string token;
    std::vector<std::string> tokens;
    while (gp >> token) tokens.push_back(token);
    if (tokens.size() == 1 && tokens[0] == "none") {
    } else if (tokens.size() == h) {
        rates.emplace();
        for (const auto &t : tokens) rates->push_back(std::stod(t));
    } else {
        throw fail("global_phase needs 'none' or one rate per subsystem");
    }

    std::vector<std::vector<double>> alphas;
    std::vector<std::vector<bool>> seen;
    for (unsigned n : layout.qubits()) {
        alphas.emplace_back(n, 0.0);
        seen.emplace_back(n, false);
    }
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        std::size_t j = 0, k = 0;
        double value = 0.0;
        if (!(row >> word >> j >> k >> value) || word != "alpha") throw fail("bad line '" + line + "'");
        if (j < 1 || j > h || k < 1 || k > alphas[j - 1].size()) throw fail("alpha index out of range");
        alphas[j - 1][k - 1] = value;
        seen[j - 1][k - 1] = true;
    }
    for (const auto &block : seen)
        for (bool s : block)
            if (!s) throw fail("missing alpha coefficient");
    return KoopmanModel{DiagonalHamiltonian(layout, std::move(alphas)), std::move(rates)};
}

inline void write_qkham(const std::string &path, const KoopmanModel &model) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path);
    out << to_qkham(model);
}

inline KoopmanModel read_qkham(const std::string &path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open Hamiltonian file " + path);
    return parse_qkham(in);
}

}  // namespace qkm
