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
#include <cmath>
#include <complex>
#include <cstdint>
#include <iomanip>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "qkm/encoders.hpp"
#include "qkm/errors.hpp"
#include "qkm/fft.hpp"
#include "qkm/model.hpp"
#include "qkm/relative_error.hpp"
#include "qkm/trajectory_io.hpp"

namespace qkm {

// ---------------------------------------------------------------------------
// Losses
//
// Every term is a squared relative error ||pred - x||^2 / ||x||^2 as measured
// by the encoder (state space for real fields, observable space for angles and
// latents). Per-trajectory means are averaged over trajectories.

struct LossReport {
    double reconstruction = 0.0;
    double prediction = 0.0;
    double pair_loss = 0.0;
    std::size_t zero_step_pairs = 0;  // per trajectory: T + 1
    std::size_t rollout_pairs = 0;    // per trajectory: T
};

/// Decoded one-shot prediction of x_{k + dk} from x_k.
inline std::vector<double> predict_state(const ObservableEncoder &encoder, const KoopmanModel &model,
                                         std::span<const double> start, double elapsed) {
    return encoder.decode(predict(model, encoder.encode(start), elapsed));
}

namespace detail {

inline void check_compatible(const ObservableEncoder &encoder, const TrajectoryDataset &ds) {
    if (ds.snapshot_size() != encoder.state_size()) {
        throw LayoutError(encoder.name() + " encoder expects snapshots of " + std::to_string(encoder.state_size()) +
                          " values, trajectory has " + std::to_string(ds.snapshot_size()));
    }
}

inline double pair_error(const ObservableEncoder &encoder, const KoopmanModel &model, const TrajectoryDataset &ds,
                         std::size_t k, std::size_t dk) {
    const auto pred = predict_state(encoder, model, ds.snapshot(k), static_cast<double>(dk) * ds.dt);
    return encoder.relative_error(pred, ds.snapshot(k + dk), true);
}

template <typename PerTrajectory>
double average_over(std::span<const TrajectoryDataset> trajectories, PerTrajectory &&fn) {
    if (trajectories.empty()) throw ShapeError("loss needs at least one trajectory");
    double sum = 0.0;
    for (const auto &ds : trajectories) sum += fn(ds);
    return sum / static_cast<double>(trajectories.size());
}

}  // namespace detail

/// Mean over k = 0..T of the auto-encoding error of x_k.
inline double reconstruction_loss(const ObservableEncoder &encoder, std::span<const TrajectoryDataset> trajectories) {
    return detail::average_over(trajectories, [&](const TrajectoryDataset &ds) {
        detail::check_compatible(encoder, ds);
        double sum = 0.0;
        for (std::size_t k = 0; k <= ds.steps; ++k) {
            const auto rec = encoder.decode(encoder.encode(ds.snapshot(k)));
            sum += encoder.relative_error(rec, ds.snapshot(k), true);
        }
        return sum / static_cast<double>(ds.steps + 1);
    });
}

/// Mean over k = 1..T of the error of the k-step one-shot rollout from x_0.
inline double prediction_loss(const ObservableEncoder &encoder, const KoopmanModel &model,
                              std::span<const TrajectoryDataset> trajectories) {
    return detail::average_over(trajectories, [&](const TrajectoryDataset &ds) {
        detail::check_compatible(encoder, ds);
        if (ds.steps == 0) throw DomainError("prediction loss needs T >= 1");
        double sum = 0.0;
        for (std::size_t k = 1; k <= ds.steps; ++k) sum += detail::pair_error(encoder, model, ds, 0, k);
        return sum / static_cast<double>(ds.steps);
    });
}

/// Index set of the pair loss: zero-step transitions (l, 0) for l = 0..T and
/// initial rollouts (0, l) for l = 1..T.
inline std::vector<std::pair<std::size_t, std::size_t>> pair_index_set(std::size_t steps) {
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t l = 0; l <= steps; ++l) pairs.emplace_back(l, 0);
    for (std::size_t l = 1; l <= steps; ++l) pairs.emplace_back(0, l);
    return pairs;
}

/// Mean over the pair index set of the error predicting x_{k+dk} from (x_k, dk).
inline double pair_loss(const ObservableEncoder &encoder, const KoopmanModel &model,
                        std::span<const TrajectoryDataset> trajectories) {
    return detail::average_over(trajectories, [&](const TrajectoryDataset &ds) {
        detail::check_compatible(encoder, ds);
        const auto pairs = pair_index_set(ds.steps);
        double sum = 0.0;
        for (const auto &[k, dk] : pairs) sum += detail::pair_error(encoder, model, ds, k, dk);
        return sum / static_cast<double>(pairs.size());
    });
}

inline LossReport loss_report(const ObservableEncoder &encoder, const KoopmanModel &model,
                              std::span<const TrajectoryDataset> trajectories) {
    LossReport report;
    report.reconstruction = reconstruction_loss(encoder, trajectories);
    report.pair_loss = pair_loss(encoder, model, trajectories);
    report.zero_step_pairs = trajectories.front().steps + 1;
    report.rollout_pairs = trajectories.front().steps;
    if (report.rollout_pairs > 0) report.prediction = prediction_loss(encoder, model, trajectories);
    return report;
}

// ---------------------------------------------------------------------------
// Energy spectrum

/// Shell-binned spectrum of E = x^2 / 2. Mode energy is |X|^2 / (2 N) so that
/// the shell sums add up to the grid-space total sum x^2 / 2. Shells are unit
/// annuli of |kappa| rounded to the nearest integer, with integer wavenumbers
/// in DFT order on each axis.
struct SpectrumReport {
    std::vector<double> kappa;        // shell centers 0, 1, 2, ...
    std::vector<double> energy;       // shell average
    std::vector<double> shell_total;  // shell sum
    std::vector<std::size_t> occupancy;
    double grid_energy = 0.0;

    double spectral_energy() const {
        double s = 0.0;
        for (std::size_t i = 0; i < energy.size(); ++i) s += energy[i] * static_cast<double>(occupancy[i]);
        return s;
    }
};

inline SpectrumReport energy_spectrum(std::span<const double> field, std::size_t rows, std::size_t cols) {
    if (rows == 0 || cols == 0 || field.size() != rows * cols) {
        throw ShapeError("energy_spectrum: field of " + std::to_string(field.size()) + " values is not " +
                         std::to_string(rows) + "x" + std::to_string(cols));
    }
    const auto spectrum = rows == 1 ? fft::forward(field) : fft::forward_2d(field, rows, cols);
    const double n = static_cast<double>(field.size());
    const long ky_max = static_cast<long>(rows / 2), kx_max = static_cast<long>(cols / 2);
    const auto shells =
        static_cast<std::size_t>(std::lround(std::sqrt(static_cast<double>(ky_max * ky_max + kx_max * kx_max)))) + 1;
    SpectrumReport report;
    report.shell_total.assign(shells, 0.0);
    report.occupancy.assign(shells, 0);
    for (std::size_t y = 0; y < rows; ++y) {
        const auto ky = static_cast<double>(fft::wavenumber(y, rows));
        for (std::size_t x = 0; x < cols; ++x) {
            const auto kx = static_cast<double>(fft::wavenumber(x, cols));
            const auto shell = static_cast<std::size_t>(std::lround(std::sqrt(kx * kx + ky * ky)));
            report.shell_total[shell] += 0.5 * std::norm(spectrum[y * cols + x]) / n;
            report.occupancy[shell] += 1;
        }
    }
    for (std::size_t s = 0; s < shells; ++s) {
        report.kappa.push_back(static_cast<double>(s));
        report.energy.push_back(report.occupancy[s] ? report.shell_total[s] / static_cast<double>(report.occupancy[s])
                                                    : 0.0);
    }
    for (double v : field) report.grid_energy += 0.5 * v * v;
    return report;
}

// ---------------------------------------------------------------------------
// Probability densities

struct PdfReport {
    std::vector<double> edges;    // bins + 1
    std::vector<double> density;  // histogram, integrates to 1
    std::vector<double> kde;      // Gaussian KDE at bin centers (empty if off)
    double bandwidth = 0.0;       // Silverman 1.06 sigma n^{-1/5}
    double mean = 0.0;
    double variance = 0.0;        // unbiased

    double center(std::size_t i) const { return 0.5 * (edges[i] + edges[i + 1]); }
};

/// Density-normalized histogram over [lo, hi] (the sample range by default),
/// optionally with a Gaussian KDE evaluated at the bin centers.
inline PdfReport pdf_estimate(std::span<const double> samples, std::size_t bins, bool kde,
                              std::optional<std::pair<double, double>> range = std::nullopt) {
    if (samples.empty()) throw DomainError("pdf_estimate needs samples");
    if (bins == 0) throw DomainError("pdf_estimate needs at least one bin");
    PdfReport report;
    const double n = static_cast<double>(samples.size());
    for (double s : samples) report.mean += s;
    report.mean /= n;
    if (samples.size() > 1) {
        for (double s : samples) report.variance += (s - report.mean) * (s - report.mean);
        report.variance /= n - 1.0;
    }

    auto [lo, hi] = range.value_or(std::make_pair(*std::min_element(samples.begin(), samples.end()),
                                                  *std::max_element(samples.begin(), samples.end())));
    if (!(hi > lo)) {
        lo -= 0.5;
        hi += 0.5;
    }
    const double width = (hi - lo) / static_cast<double>(bins);
    for (std::size_t i = 0; i <= bins; ++i) report.edges.push_back(lo + width * static_cast<double>(i));
    std::vector<std::size_t> counts(bins, 0);
    std::size_t inside = 0;
    for (double s : samples) {
        if (s < lo || s > hi) continue;
        auto b = static_cast<std::size_t>((s - lo) / width);
        counts[std::min(b, bins - 1)] += 1;
        ++inside;
    }
    report.density.resize(bins, 0.0);
    if (inside > 0) {
        for (std::size_t i = 0; i < bins; ++i) {
            report.density[i] = static_cast<double>(counts[i]) / (static_cast<double>(inside) * width);
        }
    }

    if (kde) {
        if (samples.size() < 2) throw DegenerateError("KDE needs at least two samples");
        const double sigma = std::sqrt(report.variance);
        if (!(sigma > 0.0)) throw DegenerateError("KDE bandwidth is zero: samples have no spread");
        report.bandwidth = 1.06 * sigma * std::pow(n, -0.2);
        const double norm = 1.0 / (n * report.bandwidth * std::sqrt(2.0 * std::numbers::pi));
        for (std::size_t i = 0; i < bins; ++i) {
            const double x = report.center(i);
            double sum = 0.0;
            for (double s : samples) {
                const double u = (x - s) / report.bandwidth;
                sum += std::exp(-0.5 * u * u);
            }
            report.kde.push_back(norm * sum);
        }
    }
    return report;
}

// ---------------------------------------------------------------------------
// Structure functions

enum class IncrementAxes { Both, X, Y };

struct StructureOptions {
    IncrementAxes axes = IncrementAxes::Both;
    /// Periodic wrap-around increments; otherwise only interior pairs with
    /// both points inside the grid contribute.
    bool periodic = true;
};

struct StructureReport {
    std::vector<double> orders;
    std::vector<std::size_t> separations;
    std::vector<std::vector<double>> values;  // values[p][r]
    std::vector<double> exponents;            // log-log slope per order over the fit range
};

/// S_p(r) = < |u(x + r e) - u(x)|^p > over positions and the selected axis
/// directions, with r in grid units. Exponents are least-squares slopes of
/// log S_p against log r over separations within [fit_lo, fit_hi].
inline StructureReport structure_functions(std::span<const double> u, std::size_t rows, std::size_t cols,
                                           std::span<const double> orders, std::span<const std::size_t> separations,
                                           std::size_t fit_lo, std::size_t fit_hi, StructureOptions options = {}) {
    if (u.size() != rows * cols || rows == 0 || cols == 0) throw ShapeError("structure_functions: bad field shape");
    StructureReport report;
    report.orders.assign(orders.begin(), orders.end());
    report.separations.assign(separations.begin(), separations.end());
    const bool use_x = options.axes != IncrementAxes::Y && cols > 1;
    const bool use_y = options.axes != IncrementAxes::X && rows > 1;

    for (double p : orders) {
        std::vector<double> row;
        for (std::size_t r : separations) {
            double sum = 0.0;
            std::size_t count = 0;
            auto accumulate = [&](double a, double b) {
                sum += std::pow(std::abs(a - b), p);
                ++count;
            };
            if (use_x) {
                for (std::size_t y = 0; y < rows; ++y) {
                    for (std::size_t x = 0; x < cols; ++x) {
                        if (options.periodic) {
                            accumulate(u[y * cols + (x + r) % cols], u[y * cols + x]);
                        } else if (x + r < cols) {
                            accumulate(u[y * cols + x + r], u[y * cols + x]);
                        }
                    }
                }
            }
            if (use_y) {
                for (std::size_t y = 0; y < rows; ++y) {
                    for (std::size_t x = 0; x < cols; ++x) {
                        if (options.periodic) {
                            accumulate(u[((y + r) % rows) * cols + x], u[y * cols + x]);
                        } else if (y + r < rows) {
                            accumulate(u[(y + r) * cols + x], u[y * cols + x]);
                        }
                    }
                }
            }
            row.push_back(count ? sum / static_cast<double>(count) : 0.0);
        }
        report.values.push_back(std::move(row));
    }

    std::vector<std::size_t> fit_idx;
    for (std::size_t i = 0; i < separations.size(); ++i) {
        if (separations[i] >= fit_lo && separations[i] <= fit_hi && separations[i] > 0) fit_idx.push_back(i);
    }
    if (fit_idx.size() < 2) throw FitError("structure-function fit range holds fewer than two separations");
    for (const auto &row : report.values) {
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        bool usable = true;
        for (auto i : fit_idx) {
            if (!(row[i] > 0.0)) {
                usable = false;
                break;
            }
            const double lx = std::log(static_cast<double>(separations[i])), ly = std::log(row[i]);
            sx += lx;
            sy += ly;
            sxx += lx * lx;
            sxy += lx * ly;
        }
        const double m = static_cast<double>(fit_idx.size());
        report.exponents.push_back(usable ? (m * sxy - sx * sy) / (m * sxx - sx * sx)
                                          : std::numeric_limits<double>::quiet_NaN());
    }
    return report;
}

// ---------------------------------------------------------------------------
// Summaries

/// Linear-interpolated percentile, q in [0, 100].
inline double percentile(std::vector<double> values, double q) {
    if (values.empty()) throw DomainError("percentile of an empty set");
    std::sort(values.begin(), values.end());
    const double pos = q / 100.0 * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

inline std::string spectrum_csv(const SpectrumReport &pred, const SpectrumReport *truth = nullptr) {
    std::ostringstream out;
    out << std::setprecision(17) << "kappa,occupancy,energy" << (truth ? ",energy_truth" : "") << '\n';
    for (std::size_t i = 0; i < pred.kappa.size(); ++i) {
        out << pred.kappa[i] << ',' << pred.occupancy[i] << ',' << pred.energy[i];
        if (truth) out << ',' << (i < truth->energy.size() ? truth->energy[i] : 0.0);
        out << '\n';
    }
    return out.str();
}

inline std::string pdf_csv(const PdfReport &pred, const PdfReport *truth = nullptr) {
    std::ostringstream out;
    out << std::setprecision(17) << "center,density,kde" << (truth ? ",density_truth,kde_truth" : "") << '\n';
    for (std::size_t i = 0; i < pred.density.size(); ++i) {
        out << pred.center(i) << ',' << pred.density[i] << ',' << (pred.kde.empty() ? 0.0 : pred.kde[i]);
        if (truth) out << ',' << truth->density[i] << ',' << (truth->kde.empty() ? 0.0 : truth->kde[i]);
        out << '\n';
    }
    return out.str();
}

inline std::string structure_csv(const StructureReport &pred, const StructureReport *truth = nullptr) {
    std::ostringstream out;
    out << std::setprecision(17) << "p,r,S" << (truth ? ",S_truth" : "") << '\n';
    for (std::size_t i = 0; i < pred.orders.size(); ++i) {
        for (std::size_t r = 0; r < pred.separations.size(); ++r) {
            out << pred.orders[i] << ',' << pred.separations[r] << ',' << pred.values[i][r];
            if (truth) out << ',' << truth->values[i][r];
            out << '\n';
        }
    }
    return out.str();
}

}  // namespace qkm
