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
#include <cstdint>
#include <iomanip>
#include <numbers>
#include <sstream>
#include <span>
#include <string>
#include <vector>

#include "qkm/errors.hpp"
#include "qkm/fft.hpp"
#include "qkm/rng.hpp"
#include "qkm/trajectory_io.hpp"

namespace qkm {

namespace detail {
inline std::string num(double v) {
    std::ostringstream out;
    out << std::setprecision(17) << v;
    return out.str();
}
}  // namespace detail

// ---------------------------------------------------------------------------
// Ergodic torus rotation

/// Snapshot k holds phi0 + omega * (k dt), unwrapped.
inline TrajectoryDataset torus_rotation_trajectory(std::span<const double> omega, std::span<const double> phi0,
                                                   double dt, std::uint64_t steps) {
    if (omega.empty()) throw ShapeError("torus rotation needs at least one angle");
    if (omega.size() != phi0.size()) throw ShapeError("omega and initial angles differ in length");
    if (!(dt > 0.0)) throw DomainError("dt must be positive");
    TrajectoryDataset ds;
    ds.dims = {omega.size()};
    ds.steps = steps;
    ds.dt = dt;
    ds.set_meta("system", "torus");
    ds.values.resize((steps + 1) * omega.size());
    for (std::uint64_t k = 0; k <= steps; ++k) {
        const double t = static_cast<double>(k) * dt;
        for (std::size_t i = 0; i < omega.size(); ++i) ds.values[k * omega.size() + i] = phi0[i] + omega[i] * t;
    }
    return ds;
}

// ---------------------------------------------------------------------------
// Linear advection u_t + c u_x = 0 on [0, 2 pi)

/// Exact spectral solution: mode m picks up exp(-i c kappa_m t) with kappa in
/// standard DFT order (Nyquist = +d/2); the real part is stored.
inline TrajectoryDataset advection_trajectory(double wave_speed, std::span<const double> u0, double dt,
                                              std::uint64_t steps) {
    if (u0.empty() || !std::has_single_bit(u0.size())) {
        throw ShapeError("advection grid size must be a power of two, got " + std::to_string(u0.size()));
    }
    if (!(dt > 0.0)) throw DomainError("dt must be positive");
    const std::size_t d = u0.size();
    const auto spectrum = fft::forward(u0);
    TrajectoryDataset ds;
    ds.dims = {d};
    ds.steps = steps;
    ds.dt = dt;
    ds.set_meta("system", "advection");
    ds.set_meta("c", detail::num(wave_speed));
    ds.set_meta("domain", "[0, 2pi)");
    ds.values.resize((steps + 1) * d);
    std::copy(u0.begin(), u0.end(), ds.values.begin());
    std::vector<std::complex<double>> shifted(d);
    for (std::uint64_t k = 1; k <= steps; ++k) {
        const double t = static_cast<double>(k) * dt;
        for (std::size_t m = 0; m < d; ++m) {
            const double kappa = static_cast<double>(fft::wavenumber(m, d));
            shifted[m] = spectrum[m] * std::polar(1.0, -wave_speed * kappa * t);
        }
        const auto field = fft::inverse(shifted);
        for (std::size_t x = 0; x < d; ++x) ds.values[k * d + x] = field[x].real();
    }
    return ds;
}

/// Grid points x_m = 2 pi m / d.
inline std::vector<double> periodic_grid(std::size_t d) {
    std::vector<double> x(d);
    for (std::size_t m = 0; m < d; ++m) x[m] = 2.0 * std::numbers::pi * static_cast<double>(m) / static_cast<double>(d);
    return x;
}

/// Smooth random initial condition with every mode |kappa| < d/2 populated
/// (amplitude ~ 1/(1+|kappa|)), a nonzero mean and no Nyquist content.
inline std::vector<double> random_band_limited_field(std::size_t d, std::uint64_t seed) {
    if (d < 4 || !std::has_single_bit(d)) throw ShapeError("field size must be a power of two >= 4");
    Rng rng(seed);
    const auto x = periodic_grid(d);
    std::vector<double> u(d, 1.0 + rng.uniform());
    for (std::size_t kappa = 1; kappa < d / 2; ++kappa) {
        const double amp = (0.5 + rng.uniform()) / (1.0 + static_cast<double>(kappa));
        const double shift = rng.uniform(-std::numbers::pi, std::numbers::pi);
        for (std::size_t m = 0; m < d; ++m) u[m] += amp * std::cos(static_cast<double>(kappa) * x[m] + shift);
    }
    return u;
}

// ---------------------------------------------------------------------------
// Gray-Scott reaction-diffusion
//
//   dA/dt = D_A lap(A) - A B^2 + F (1 - A)
//   dB/dt = D_B lap(B) + A B^2 - (F + K) B

struct GrayScottParams {
    double diffusion_a = 2.1e-5;
    double diffusion_b = 1.1e-5;
    double feed = 0.029;
    double kill = 0.057;
    std::size_t nx = 128;
    std::size_t ny = 128;
    double x_min = -1.0, x_max = 1.0;
    double y_min = -1.0, y_max = 1.0;
    /// Integrator substep; 0 selects half the explicit stability bound.
    double dt_int = 0.0;

    double dx() const { return (x_max - x_min) / static_cast<double>(nx); }
    double dy() const { return (y_max - y_min) / static_cast<double>(ny); }

    /// dt_int <= h^2 / (4 max(D_A, D_B)) with h the finer grid spacing.
    double stability_bound() const {
        const double h = std::min(dx(), dy());
        return h * h / (4.0 * std::max(diffusion_a, diffusion_b));
    }

    double substep() const { return dt_int > 0.0 ? dt_int : 0.5 * stability_bound(); }

    void validate() const {
        if (!(diffusion_a > 0.0 && diffusion_b > 0.0 && feed > 0.0 && kill > 0.0)) {
            throw DomainError("Gray-Scott coefficients must be positive");
        }
        if (nx < 3 || ny < 3) throw ShapeError("Gray-Scott grid must be at least 3x3");
        if (!(x_max > x_min && y_max > y_min)) throw DomainError("Gray-Scott domain bounds are inverted");
        if (dt_int < 0.0) throw DomainError("dt_int must be positive");
        if (substep() > stability_bound()) {
            throw DomainError("dt_int " + detail::num(substep()) + " exceeds the stability bound " +
                              detail::num(stability_bound()));
        }
    }
};

/// Uniform A = 1, B = 0 with a few seeded square patches of (0.5, 0.25) and
/// 1% noise, in the spirit of Pearson's experiments.
inline std::pair<std::vector<double>, std::vector<double>> gray_scott_initial_condition(const GrayScottParams &p,
                                                                                       std::uint64_t seed,
                                                                                       int patches = 8) {
    Rng rng(seed);
    std::vector<double> a(p.nx * p.ny, 1.0), b(p.nx * p.ny, 0.0);
    const std::size_t half = std::max<std::size_t>(2, std::min(p.nx, p.ny) / 16);
    for (int s = 0; s < patches; ++s) {
        const std::size_t cx = rng.below(p.nx), cy = rng.below(p.ny);
        for (std::size_t dy = 0; dy < 2 * half; ++dy) {
            for (std::size_t dx = 0; dx < 2 * half; ++dx) {
                const std::size_t i = ((cy + dy) % p.ny) * p.nx + (cx + dx) % p.nx;
                a[i] = 0.5;
                b[i] = 0.25;
            }
        }
    }
    for (std::size_t i = 0; i < a.size(); ++i) {
        a[i] = std::clamp(a[i] + 0.01 * rng.uniform(-1.0, 1.0), 0.0, 1.0);
        b[i] = std::clamp(b[i] + 0.01 * rng.uniform(-1.0, 1.0), 0.0, 1.0);
    }
    return {std::move(a), std::move(b)};
}

/// Explicit Euler with a periodic 5-point Laplacian, sampled every dt.
/// Snapshots have shape (2, ny, nx): plane 0 is Y_A, plane 1 is Y_B.
inline TrajectoryDataset gray_scott_trajectory(const GrayScottParams &p, std::span<const double> a0,
                                               std::span<const double> b0, double dt, std::uint64_t steps) {
    p.validate();
    const std::size_t nx = p.nx, ny = p.ny, cells = nx * ny;
    if (a0.size() != cells || b0.size() != cells) {
        throw ShapeError("Gray-Scott fields must have " + std::to_string(cells) + " values");
    }
    for (std::size_t i = 0; i < cells; ++i) {
        if (!(a0[i] >= 0.0 && a0[i] <= 1.5 && b0[i] >= 0.0 && b0[i] <= 1.5)) {
            throw DomainError("Gray-Scott initial values must lie in [0, 1.5]");
        }
    }
    if (!(dt > 0.0)) throw DomainError("dt must be positive");

    const auto substeps = static_cast<std::uint64_t>(std::ceil(dt / p.substep() * (1.0 - 1e-12)));
    const double h = dt / static_cast<double>(substeps);
    const double inv_dx2 = 1.0 / (p.dx() * p.dx());
    const double inv_dy2 = 1.0 / (p.dy() * p.dy());

    TrajectoryDataset ds;
    ds.dims = {2, ny, nx};
    ds.steps = steps;
    ds.dt = dt;
    ds.set_meta("system", "grayscott");
    ds.set_meta("fields", "Y_A,Y_B");
    ds.set_meta("F", detail::num(p.feed));
    ds.set_meta("K", detail::num(p.kill));
    ds.set_meta("D_A", detail::num(p.diffusion_a));
    ds.set_meta("D_B", detail::num(p.diffusion_b));
    ds.set_meta("domain", "[" + detail::num(p.x_min) + "," + detail::num(p.x_max) + "]x[" + detail::num(p.y_min) +
                              "," + detail::num(p.y_max) + "]");
    ds.set_meta("integrator", "explicit-euler/5-point-laplacian/periodic");
    ds.set_meta("dt_int", detail::num(h));
    ds.set_meta("dt_int_policy", p.dt_int > 0.0 ? "user" : "stability-bound/2");
    // t* = t / tau with tau = 1 / F.
    ds.set_meta("tstar_per_time", detail::num(p.feed));
    ds.values.resize((steps + 1) * 2 * cells);

    std::vector<double> a(a0.begin(), a0.end()), b(b0.begin(), b0.end());
    std::vector<double> na(cells), nb(cells);
    auto store = [&](std::uint64_t k) {
        std::copy(a.begin(), a.end(), ds.values.begin() + static_cast<long>(k * 2 * cells));
        std::copy(b.begin(), b.end(), ds.values.begin() + static_cast<long>(k * 2 * cells + cells));
    };
    store(0);
    std::uint64_t substep_index = 0;
    for (std::uint64_t k = 1; k <= steps; ++k) {
        for (std::uint64_t s = 0; s < substeps; ++s, ++substep_index) {
            bool finite = true;
            for (std::size_t y = 0; y < ny; ++y) {
                const std::size_t up = ((y + ny - 1) % ny) * nx, down = ((y + 1) % ny) * nx, row = y * nx;
                for (std::size_t x = 0; x < nx; ++x) {
                    const std::size_t left = (x + nx - 1) % nx, right = (x + 1) % nx, i = row + x;
                    const double lap_a = (a[row + left] + a[row + right] - 2.0 * a[i]) * inv_dx2 +
                                         (a[up + x] + a[down + x] - 2.0 * a[i]) * inv_dy2;
                    const double lap_b = (b[row + left] + b[row + right] - 2.0 * b[i]) * inv_dx2 +
                                         (b[up + x] + b[down + x] - 2.0 * b[i]) * inv_dy2;
                    const double reaction = a[i] * b[i] * b[i];
                    na[i] = a[i] + h * (p.diffusion_a * lap_a - reaction + p.feed * (1.0 - a[i]));
                    nb[i] = b[i] + h * (p.diffusion_b * lap_b + reaction - (p.feed + p.kill) * b[i]);
                    finite = finite && std::isfinite(na[i]) && std::isfinite(nb[i]);
                }
            }
            if (!finite) {
                throw IntegrationError("non-finite concentration at integrator substep " +
                                       std::to_string(substep_index + 1) + " (output step " + std::to_string(k) + ")");
            }
            a.swap(na);
            b.swap(nb);
        }
        store(k);
    }
    return ds;
}

}  // namespace qkm
