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

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "qkm/errors.hpp"
#include "qkm/layout.hpp"
#include "qkm/model.hpp"
#include "qkm/parallel.hpp"
#include "qkm/unitary.hpp"

namespace qkm {

/// Phases of one subsystem sampled at k = 0..T with uniform spacing dt.
/// Row-major: entry (k, l) = phases[k * width + l].
struct PhaseTrajectory {
    double dt = 1.0;
    std::size_t steps = 0;  // T
    std::size_t width = 0;  // N_j
    std::vector<double> phases;

    PhaseTrajectory() = default;
    PhaseTrajectory(double dt_, std::size_t steps_, std::size_t width_, std::vector<double> phases_)
        : dt(dt_), steps(steps_), width(width_), phases(std::move(phases_)) {
        if (!(dt > 0.0)) throw DomainError("time step must be positive");
        if (phases.size() != (steps + 1) * width) {
            throw ShapeError("phase trajectory holds " + std::to_string(phases.size()) +
                             " values, expected (T+1)*N = " + std::to_string((steps + 1) * width));
        }
    }

    double at(std::size_t k, std::size_t l) const { return phases[k * width + l]; }
    double &at(std::size_t k, std::size_t l) { return phases[k * width + l]; }
};

/// Removes 2*pi jumps along time for every index. Each output value is the
/// raw value plus an integer multiple of 2*pi; consecutive differences end up
/// in (-pi, pi], with a jump of exactly pi kept as +pi.
///
/// True per-step increments must satisfy |delta| < pi. Larger increments alias
/// silently; nothing in the data can reveal them.
inline PhaseTrajectory unwrap_phases(const PhaseTrajectory &trajectory) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    PhaseTrajectory out = trajectory;
    for (std::size_t l = 0; l < trajectory.width; ++l) {
        double turns = 0.0;
        for (std::size_t k = 1; k <= trajectory.steps; ++k) {
            const double raw_step = trajectory.at(k, l) - trajectory.at(k - 1, l);
            turns += std::round((wrap_phase(raw_step) - raw_step) / two_pi);
            out.at(k, l) = trajectory.at(k, l) + two_pi * turns;
        }
    }
    return out;
}

/// Ordinary least-squares slope of phi_l(k) against k (radians per step).
inline std::vector<double> estimate_rates(const PhaseTrajectory &unwrapped) {
    if (unwrapped.steps == 0) throw FitError("rate estimation needs at least two snapshots (T >= 1)");
    const std::size_t count = unwrapped.steps + 1;
    const double mean_k = 0.5 * static_cast<double>(unwrapped.steps);
    double sxx = 0.0;
    for (std::size_t k = 0; k < count; ++k) {
        const double dk = static_cast<double>(k) - mean_k;
        sxx += dk * dk;
    }
    std::vector<double> rates(unwrapped.width);
    for (std::size_t l = 0; l < unwrapped.width; ++l) {
        double mean_phi = 0.0;
        for (std::size_t k = 0; k < count; ++k) mean_phi += unwrapped.at(k, l);
        mean_phi /= static_cast<double>(count);
        double sxy = 0.0;
        for (std::size_t k = 0; k < count; ++k) {
            sxy += (static_cast<double>(k) - mean_k) * (unwrapped.at(k, l) - mean_phi);
        }
        rates[l] = sxy / sxx;
    }
    return rates;
}

struct FitResult {
    std::vector<double> alphas;                 // radians per unit time
    std::optional<double> global_phase_rate;    // radians per step
    double residual_rms = 0.0;                  // radians per step
    double max_abs_residual = 0.0;
    std::vector<double> per_index_rates;        // observed, radians per step
    std::size_t active_count = 0;               // indices that entered the fit
    bool exact_by_construction = false;         // square system (N_j = n_j + 1)

    std::string to_text(std::size_t j) const {
        std::ostringstream out;
        out << std::setprecision(17);
        out << "subsystem " << j << '\n';
        for (std::size_t k = 0; k < alphas.size(); ++k) out << "alpha " << (k + 1) << ' ' << alphas[k] << '\n';
        out << "global_phase_rate ";
        if (global_phase_rate) {
            out << *global_phase_rate << '\n';
        } else {
            out << "none\n";
        }
        out << "residual_rms " << residual_rms << '\n';
        return out.str();
    }
};

/// Model rate of index l: -(dt/2) sum_k alpha_k z_k(l) (+ g).
inline double model_rate(std::span<const double> alphas, std::optional<double> global_rate,
                         double dt, std::uint64_t l) {
    return eigenvalue_from_alphas(alphas, l) * dt + global_rate.value_or(0.0);
}

/// Least-squares fit of delta = M alpha (+ g 1) with M_{l,k} = -(dt/2) z_k(l).
///
/// Without a mask every column of M is +-dt/2 with balanced signs and the
/// columns are mutually orthogonal (and orthogonal to the constant column), so
/// the solution is a per-column projection. With a mask the orthogonality is
/// lost and the reduced system goes through a QR solve.
inline FitResult fit_alphas(std::span<const double> rates, const SubsystemLayout &layout, std::size_t j,
                            double dt, bool include_global_phase,
                            const std::vector<bool> *active = nullptr) {
    const std::uint64_t dim = layout.dim(j);
    const unsigned n = layout.qubit_count(j);
    if (rates.size() != dim) {
        throw ShapeError("rate vector has length " + std::to_string(rates.size()) + ", subsystem " +
                         std::to_string(j) + " expects " + std::to_string(dim));
    }
    if (!(dt > 0.0)) throw DomainError("time step must be positive");
    if (active && active->size() != dim) throw ShapeError("mask length does not match subsystem");

    const std::size_t params = n + (include_global_phase ? 1 : 0);
    std::size_t active_count = dim;
    if (active) active_count = static_cast<std::size_t>(std::count(active->begin(), active->end(), true));
    if (active_count < params) {
        throw FitError("underdetermined: " + std::to_string(active_count) + " usable indices for " +
                       std::to_string(params) + " parameters in subsystem " + std::to_string(j));
    }

    FitResult result;
    result.per_index_rates.assign(rates.begin(), rates.end());
    result.active_count = active_count;
    result.exact_by_construction = active_count == params;
    result.alphas.assign(n, 0.0);

    if (!active || active_count == dim) {
        // Column k has squared norm N dt^2 / 4.
        const double inv_norm = -2.0 / (static_cast<double>(dim) * dt);
        for (unsigned k = 1; k <= n; ++k) {
            double dot = 0.0;
            for (std::uint64_t l = 0; l < dim; ++l) dot += basis_parity(l, k, n) * rates[l];
            result.alphas[k - 1] = inv_norm * dot;
        }
        if (include_global_phase) {
            double mean = 0.0;
            for (double r : rates) mean += r;
            result.global_phase_rate = mean / static_cast<double>(dim);
        }
    } else {
        Eigen::MatrixXd design(static_cast<Eigen::Index>(active_count), static_cast<Eigen::Index>(params));
        Eigen::VectorXd rhs(static_cast<Eigen::Index>(active_count));
        Eigen::Index row = 0;
        for (std::uint64_t l = 0; l < dim; ++l) {
            if (!(*active)[l]) continue;
            for (unsigned k = 1; k <= n; ++k) design(row, k - 1) = -0.5 * dt * basis_parity(l, k, n);
            if (include_global_phase) design(row, n) = 1.0;
            rhs(row) = rates[l];
            ++row;
        }
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
        if (qr.rank() < static_cast<Eigen::Index>(params)) {
            throw FitError("masked design matrix is rank deficient in subsystem " + std::to_string(j));
        }
        const Eigen::VectorXd solution = qr.solve(rhs);
        for (unsigned k = 0; k < n; ++k) result.alphas[k] = solution(k);
        if (include_global_phase) result.global_phase_rate = solution(n);
    }

    double sum_sq = 0.0;
    for (std::uint64_t l = 0; l < dim; ++l) {
        if (active && !(*active)[l]) continue;
        const double r = rates[l] - model_rate(result.alphas, result.global_phase_rate, dt, l);
        sum_sq += r * r;
        result.max_abs_residual = std::max(result.max_abs_residual, std::abs(r));
    }
    result.residual_rms = std::sqrt(sum_sq / static_cast<double>(active_count));
    return result;
}

struct SystemFit {
    KoopmanModel model;
    std::vector<FitResult> blocks;
    double worst_residual = 0.0;   // max |residual| over all blocks and indices
    std::size_t worst_subsystem = 0;
};

/// Fits every subsystem independently (unwrap, rate estimate, projection) and
/// assembles the block-diagonal model. `masks`, when given, holds one mask per
/// subsystem (an empty mask means "use every index").
inline SystemFit fit_system(const std::vector<PhaseTrajectory> &trajectories, const SubsystemLayout &layout,
                            double dt, bool include_global_phase,
                            const std::vector<std::vector<bool>> *masks = nullptr) {
    const std::size_t h = layout.subsystem_count();
    if (trajectories.size() != h) {
        throw LayoutError("need one phase trajectory per subsystem: got " +
                          std::to_string(trajectories.size()) + " for " + layout.describe());
    }
    if (masks && masks->size() != h) throw LayoutError("need one mask per subsystem");
    for (std::size_t j = 0; j < h; ++j) {
        if (trajectories[j].width != layout.dims()[j]) {
            throw LayoutError("trajectory for subsystem " + std::to_string(j + 1) + " has width " +
                              std::to_string(trajectories[j].width) + ", layout expects " +
                              std::to_string(layout.dims()[j]));
        }
    }

    std::vector<FitResult> blocks(h);
    parallel_for(h, [&](std::size_t j) {
        const auto rates = estimate_rates(unwrap_phases(trajectories[j]));
        const std::vector<bool> *mask = nullptr;
        if (masks && !(*masks)[j].empty()) mask = &(*masks)[j];
        blocks[j] = fit_alphas(rates, layout, j + 1, dt, include_global_phase, mask);
    });

    SystemFit fit;
    std::vector<std::vector<double>> alphas;
    std::optional<std::vector<double>> drift;
    if (include_global_phase) drift.emplace();
    for (std::size_t j = 0; j < h; ++j) {
        alphas.push_back(blocks[j].alphas);
        if (drift) drift->push_back(*blocks[j].global_phase_rate / dt);
        if (blocks[j].max_abs_residual >= fit.worst_residual) {
            fit.worst_residual = blocks[j].max_abs_residual;
            fit.worst_subsystem = j + 1;
        }
    }
    fit.model = KoopmanModel{DiagonalHamiltonian(layout, std::move(alphas)), std::move(drift)};
    fit.blocks = std::move(blocks);
    return fit;
}

}  // namespace qkm
